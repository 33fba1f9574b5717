#pragma once

// File formats: headerless 0/1 CSVs for Q and responses, JSON for
// hierarchies, parameters, fits and configs.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hiercdm/em.hpp"
#include "hiercdm/qmatrix.hpp"

namespace hiercdm {

/// Rows of 0/1 values. Blank lines are skipped; every nonblank line must
/// have the same number of fields. Throws ParseError with 1-based line and
/// column.
std::vector<std::vector<std::uint8_t>> parse_binary_csv(std::istream& in, const std::string& source);

QMatrix parse_q_csv(std::istream& in, const std::string& source);
QMatrix read_q_csv(const std::string& path);
/// ColumnCountMismatch when expected_J is given and differs.
ResponseMatrix parse_responses_csv(std::istream& in, const std::string& source,
                                   std::optional<int> expected_J = std::nullopt);
ResponseMatrix read_responses_csv(const std::string& path, std::optional<int> expected_J = std::nullopt);

void write_q_csv(std::ostream& out, const QMatrix& q);
void write_responses_csv(std::ostream& out, const ResponseMatrix& r);
void write_profiles_csv(std::ostream& out, const ProfileSet& profiles);

/// Parses a whole JSON document; syntax errors become ParseError with the
/// line and column of the offending byte.
nlohmann::json parse_json(const std::string& text, const std::string& source);
nlohmann::json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// {"K": int, "edges": [[k, l], ...]} with 1-based attributes.
Hierarchy hierarchy_from_json(const nlohmann::json& j, const std::string& source = "hierarchy");
nlohmann::json to_json(const Hierarchy& h);
Hierarchy read_hierarchy_json(const std::string& path);

nlohmann::json params_to_json(const ItemParams& params, const QMatrix& q);
ItemParams params_from_json(const nlohmann::json& j, const QMatrix& q);

nlohmann::json to_json(const ProportionVector& p);
nlohmann::json fit_to_json(const CdmFit& fit, const QMatrix& q);

/// Overrides fields of `base` that appear in `j`.
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});
nlohmann::json to_json(const FitConfig& cfg);

}  // namespace hiercdm
