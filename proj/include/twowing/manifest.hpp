#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "twowing/errors.hpp"

namespace twowing {

constexpr const char* kToolVersion = "0.1.0";

/// What a command ran with, written alongside its outputs so any run can be
/// re-executed exactly.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> options;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
};

inline void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["options"] = m.options;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["wall_seconds"] = m.wall_seconds;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path);
  out << j.dump(1) << "\n";
  if (!out) throw IoError("short write on manifest " + path);
}

}  // namespace twowing
