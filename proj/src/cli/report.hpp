#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "adot/io.hpp"

namespace adot::cli {

struct Diagnostics {
  double duality_gap = 0.0;
  double max_constraint_residual = 0.0;
  std::size_t lp_iterations = 0;
  double wall_time_ms = 0.0;
};

class RunReport {
 public:
  explicit RunReport(std::vector<std::string> argv) : argv_(std::move(argv)) {}

  // reads a file and records its digest under the given role
  std::string load(const std::string& role, const std::string& path);

  void set_value(io::Json v) { value_ = std::move(v); }
  void set_diagnostics(const Diagnostics& d) { diagnostics_ = d; }
  void add_payload(const std::string& key, io::Json payload) { payloads_[key] = std::move(payload); }
  void set_status(int code, std::string error, std::string message);

  io::Json to_json() const;

 private:
  std::vector<std::string> argv_;
  io::Json inputs_ = io::Json::array();
  io::Json value_;
  std::optional<Diagnostics> diagnostics_;
  io::Json payloads_ = io::Json::object();
  int status_ = 0;
  std::string error_;
  std::string message_;
};

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace adot::cli
