#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace compsnn {

inline constexpr std::size_t kDemographicDim = 8;

enum class FieldKind { categorical, ordinal };

/// One demographic attribute and its ordered value labels. For ordinal
/// fields the order is the natural level order; for categorical fields it is
/// an arbitrary but fixed assignment.
struct DemographicField {
  std::string name;
  FieldKind kind{FieldKind::ordinal};
  std::vector<std::string> values;
};

struct DemographicSchema {
  std::array<DemographicField, kDemographicDim> fields;

  /// Throws InvalidArgument on empty value lists, duplicate names or labels.
  void validate() const;
};

/// Demographic record encoded into [0,1]^8.
struct DemographicVector {
  std::array<double, kDemographicDim> values{};

  friend bool operator==(const DemographicVector&, const DemographicVector&) = default;
};

/// Level index i of a field with L values maps to i / (L - 1); single-valued
/// fields map to 0. Throws MissingField / UnknownCategory.
DemographicVector encode_demographics(const std::map<std::string, std::string>& record,
                                      const DemographicSchema& schema);

DemographicSchema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const DemographicSchema& schema);
DemographicSchema load_schema(const std::filesystem::path& path);
void save_schema(const DemographicSchema& schema, const std::filesystem::path& path);

}  // namespace compsnn
