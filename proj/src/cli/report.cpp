#include "report.hpp"

namespace adot::cli {

std::string RunReport::load(const std::string& role, const std::string& path) {
  std::string text = io::read_file(path);
  inputs_.push_back(io::Json{{"role", role}, {"path", path}, {"digest", io::digest(text)}});
  return text;
}

void RunReport::set_status(int code, std::string error, std::string message) {
  status_ = code;
  error_ = std::move(error);
  message_ = std::move(message);
}

io::Json RunReport::to_json() const {
  io::Json j;
  j["command"] = io::Json{{"name", argv_.empty() ? std::string() : argv_.front()}, {"argv", argv_}};
  j["inputs"] = inputs_;
  j["value"] = value_;
  if (diagnostics_) {
    j["diagnostics"] = io::Json{{"duality_gap", diagnostics_->duality_gap},
                                {"max_constraint_residual", diagnostics_->max_constraint_residual},
                                {"lp_iterations", diagnostics_->lp_iterations},
                                {"wall_time_ms", diagnostics_->wall_time_ms}};
  }
  for (auto it = payloads_.begin(); it != payloads_.end(); ++it) j[it.key()] = it.value();
  io::Json status{{"code", status_}};
  if (!error_.empty()) {
    status["error"] = error_;
    status["message"] = message_;
  }
  j["status"] = std::move(status);
  return j;
}

}  // namespace adot::cli
