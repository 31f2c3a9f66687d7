#ifndef VRA_SERIALIZATION_HPP
#define VRA_SERIALIZATION_HPP

#include <json.hpp>

#include "vra/attacks.hpp"
#include "vra/network.hpp"
#include "vra/train.hpp"

namespace vra {

/// Reading is partial: absent keys keep the current value. Unknown keys and
/// wrongly typed values throw ParameterError naming the key.
void to_json(nlohmann::json& j, const BlockSpec& b);
void from_json(const nlohmann::json& j, BlockSpec& b);
void to_json(nlohmann::json& j, const Architecture& a);
void from_json(const nlohmann::json& j, Architecture& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const FeatureSpec& s);
void from_json(const nlohmann::json& j, FeatureSpec& s);
void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

std::string to_string(Pooling p);
Pooling pooling_from_string(const std::string& s);
std::string to_string(DirectionMode m);
DirectionMode direction_mode_from_string(const std::string& s);

/// Throws ParameterError when `j` is not an object or has a key outside `allowed`.
void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Reads j[key] into out when present.
template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(where + "." + key + ": " + e.what());
  }
}

}  // namespace vra

#endif  // VRA_SERIALIZATION_HPP
