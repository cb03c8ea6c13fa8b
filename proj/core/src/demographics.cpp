#include "compsnn/demographics.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "compsnn/error.hpp"

namespace compsnn {

void DemographicSchema::validate() const {
  std::set<std::string> names;
  for (const DemographicField& f : fields) {
    if (f.name.empty()) throw Error(ErrorCode::InvalidArgument, "schema field without a name");
    if (!names.insert(f.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate field '" + f.name + "'");
    if (f.values.empty()) throw Error(ErrorCode::InvalidArgument, "field '" + f.name + "' has no values");
    std::set<std::string> labels(f.values.begin(), f.values.end());
    if (labels.size() != f.values.size()) {
      throw Error(ErrorCode::InvalidArgument, "field '" + f.name + "' repeats a value label");
    }
  }
}

DemographicVector encode_demographics(const std::map<std::string, std::string>& record,
                                      const DemographicSchema& schema) {
  DemographicVector out;
  for (std::size_t i = 0; i < kDemographicDim; ++i) {
    const DemographicField& field = schema.fields[i];
    const auto it = record.find(field.name);
    if (it == record.end()) throw Error(ErrorCode::MissingField, "record has no field '" + field.name + "'");
    std::size_t index = field.values.size();
    for (std::size_t k = 0; k < field.values.size(); ++k) {
      if (field.values[k] == it->second) {
        index = k;
        break;
      }
    }
    if (index == field.values.size()) {
      throw Error(ErrorCode::UnknownCategory, "'" + it->second + "' is not a value of field '" + field.name + "'");
    }
    const std::size_t levels = field.values.size();
    out.values[i] = levels == 1 ? 0.0 : static_cast<double>(index) / static_cast<double>(levels - 1);
  }
  return out;
}

DemographicSchema schema_from_json(const nlohmann::json& doc) {
  try {
    const auto& fields = doc.at("fields");
    if (!fields.is_array() || fields.size() != kDemographicDim) {
      throw Error(ErrorCode::ParseError, "schema must declare exactly 8 fields");
    }
    DemographicSchema schema;
    for (std::size_t i = 0; i < kDemographicDim; ++i) {
      const auto& f = fields[i];
      DemographicField& out = schema.fields[i];
      out.name = f.at("name").get<std::string>();
      const std::string kind = f.at("kind").get<std::string>();
      if (kind == "ordinal") {
        out.kind = FieldKind::ordinal;
      } else if (kind == "categorical") {
        out.kind = FieldKind::categorical;
      } else {
        throw Error(ErrorCode::ParseError, "unknown field kind '" + kind + "'");
      }
      out.values = f.at("values").get<std::vector<std::string>>();
    }
    schema.validate();
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("demographic schema: ") + e.what());
  }
}

nlohmann::json schema_to_json(const DemographicSchema& schema) {
  nlohmann::json fields = nlohmann::json::array();
  for (const DemographicField& f : schema.fields) {
    fields.push_back({{"name", f.name},
                      {"kind", f.kind == FieldKind::ordinal ? "ordinal" : "categorical"},
                      {"values", f.values}});
  }
  return {{"fields", fields}};
}

DemographicSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open schema " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return schema_from_json(doc);
}

void save_schema(const DemographicSchema& schema, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << schema_to_json(schema).dump(2) << '\n';
}

}  // namespace compsnn
