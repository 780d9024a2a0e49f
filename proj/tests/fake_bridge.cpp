// Scripted model process for bridge tests. The first argument picks the
// behavior; see usage() below.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <json.hpp>

#include <filesystem>

#include "xaibench/bridge.hpp"
#include "xaibench/harness.hpp"

using namespace xaibench;

namespace {

double mean_intensity(const Image& image) {
  double sum = 0.0;
  for (auto p : image.pixels) sum += p;
  return sum / (255.0 * static_cast<double>(image.pixels.size()));
}

int usage() {
  std::cerr << "fake_bridge mean|logit|bad-id|exit-after N|hang|no-handshake|error|wrong-count|garbage\n"
               "fake_bridge pool FUNCTION DATASET SEED N [MARKER DIE_AFTER]\n";
  return 64;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage();
  const std::string mode = argv[1];
  PredictorInfo info;
  info.name = "fake-" + mode;

  if (mode == "mean") {
    serve_bridge(std::cin, std::cout, info, mean_intensity);
    return 0;
  }
  if (mode == "logit") {
    info.is_classifier = true;
    info.raw_logit = true;
    serve_bridge(std::cin, std::cout, info, [](const Image& im) { return mean_intensity(im) - 0.01; });
    return 0;
  }
  if (mode == "no-handshake") return 5;
  if (mode == "pool") {
    // Oracle over the evaluation scenes. While MARKER exists the process dies
    // after DIE_AFTER requests, like a crashing model server.
    if (argc < 6) return usage();
    const auto fn = AttributionFunction::make(parse_function_kind(argv[2]));
    const auto ds = parse_dataset_kind(argv[3]);
    std::vector<Scene> scenes;
    for (int id = 0; id < std::stoi(argv[5]); ++id) scenes.push_back(evaluation_scene(ds, std::stoull(argv[4]), id));
    ScenePoolOracle oracle(std::move(scenes), fn);
    const bool dying = argc >= 8 && std::filesystem::exists(argv[6]);
    const int die_after = dying ? std::stoi(argv[7]) : -1;
    int calls = 0;
    serve_bridge(std::cin, std::cout, oracle.info(), [&](const Image& image) {
      if (calls++ == die_after) std::exit(9);
      return oracle.predict(image);
    });
    return 0;
  }

  std::cout << encode_handshake(info) << '\n' << std::flush;
  if (mode == "hang") {
    std::this_thread::sleep_for(std::chrono::hours(1));
    return 0;
  }
  const int limit = mode == "exit-after" && argc > 2 ? std::stoi(argv[2]) : -1;
  int served = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (served == limit) return 3;
    const BridgeRequest req = decode_request(line);
    BridgeResponse resp;
    resp.id = req.id;
    for (const auto& image : req.images) resp.values.push_back(mean_intensity(image));
    if (mode == "bad-id") {
      resp.id = req.id + 100;
    } else if (mode == "error") {
      resp.values.clear();
      resp.error = "model exploded";
    } else if (mode == "wrong-count") {
      resp.values.push_back(0.0);
    } else if (mode == "garbage") {
      std::cout << "this is not json\n" << std::flush;
      ++served;
      continue;
    } else if (mode != "exit-after") {
      return usage();
    }
    std::cout << encode_response(resp) << '\n' << std::flush;
    ++served;
  }
  return 0;
}
