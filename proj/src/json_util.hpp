#pragma once

// Internal JSON helpers shared by the report writers.

#include <json.hpp>

#include <stdexcept>
#include <string>

#include "eqloss/losses.hpp"

namespace eqloss::detail {

using ojson = nlohmann::ordered_json;

/// Runs `f`, turning parser and schema errors into std::invalid_argument
/// prefixed with `what`.
template <typename F>
auto with_json_errors(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

inline ojson loss_to_json(const LossConfig& cfg) {
  ojson j;
  j["kind"] = std::string(to_string(cfg.kind));
  j["r"] = cfg.r;
  j["alpha"] = cfg.alpha;
  if (cfg.epsilon.is_auto()) {
    j["epsilon"] = "auto";
  } else {
    j["epsilon"] = cfg.epsilon.value_or_zero();
  }
  j["lambda"] = cfg.lambda;
  return j;
}

inline LossConfig loss_from_json(const ojson& j, LossConfig base = {}) {
  if (j.contains("kind")) base.kind = parse_loss_kind(j.at("kind").get<std::string>());
  if (j.contains("r")) base.r = j.at("r").get<double>();
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  if (j.contains("epsilon")) {
    const auto& e = j.at("epsilon");
    if (e.is_string()) {
      if (e.get<std::string>() != "auto")
        throw std::invalid_argument("epsilon must be a number or \"auto\"");
      base.epsilon = Epsilon::automatic();
    } else {
      base.epsilon = Epsilon::fixed(e.get<double>());
    }
  }
  if (j.contains("lambda")) base.lambda = j.at("lambda").get<double>();
  base.check();
  return base;
}

}  // namespace eqloss::detail
