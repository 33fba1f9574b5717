#include "hiercdm/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "hiercdm/errors.hpp"

namespace hiercdm {

std::vector<std::vector<std::uint8_t>> parse_binary_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::uint8_t> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::size_t a = pos;
      std::size_t b = end;
      while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
      while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
      const std::string field = line.substr(a, b - a);
      if (field != "0" && field != "1") {
        throw ParseError(source, line_no, static_cast<int>(a) + 1,
                         field.empty() ? "empty field" : "expected 0 or 1, found '" + field + "'");
      }
      row.push_back(field == "1" ? 1 : 0);
      if (end == line.size()) break;
      pos = end + 1;
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw ParseError(source, line_no, 1,
                       "expected " + std::to_string(width) + " fields, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, line_no, 0, "no data rows");
  return rows;
}

QMatrix parse_q_csv(std::istream& in, const std::string& source) {
  const auto rows = parse_binary_csv(in, source);
  const int K = static_cast<int>(rows.front().size());
  if (K > 32) throw ParseError(source, 1, 1, "more than 32 attributes");
  std::vector<ProfileCode> masks;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    ProfileCode m = 0;
    for (int k = 0; k < K; ++k) {
      if (rows[j][k]) m |= attribute_bit(K, k);
    }
    if (m == 0) throw ParseError(source, static_cast<int>(j) + 1, 1, "Q row requires no attribute");
    masks.push_back(m);
  }
  return QMatrix::from_row_masks(K, std::move(masks));
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

}  // namespace

QMatrix read_q_csv(const std::string& path) {
  auto in = open_input(path);
  return parse_q_csv(in, path);
}

ResponseMatrix parse_responses_csv(std::istream& in, const std::string& source, std::optional<int> expected_J) {
  const auto rows = parse_binary_csv(in, source);
  const int J = static_cast<int>(rows.front().size());
  if (expected_J && *expected_J != J) {
    throw ColumnCountMismatch(source + ": expected " + std::to_string(*expected_J) + " item columns, found " +
                              std::to_string(J));
  }
  ResponseMatrix r(static_cast<int>(rows.size()), J);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < J; ++j) r(static_cast<int>(i), j) = rows[i][j];
  }
  return r;
}

ResponseMatrix read_responses_csv(const std::string& path, std::optional<int> expected_J) {
  auto in = open_input(path);
  return parse_responses_csv(in, path, expected_J);
}

void write_q_csv(std::ostream& out, const QMatrix& q) {
  for (int j = 0; j < q.J(); ++j) {
    for (int k = 0; k < q.K(); ++k) out << (k ? "," : "") << q(j, k);
    out << '\n';
  }
}

void write_responses_csv(std::ostream& out, const ResponseMatrix& r) {
  std::string line;
  for (int i = 0; i < r.N(); ++i) {
    line.clear();
    for (int j = 0; j < r.J(); ++j) {
      if (j) line += ',';
      line += r(i, j) ? '1' : '0';
    }
    out << line << '\n';
  }
}

void write_profiles_csv(std::ostream& out, const ProfileSet& profiles) {
  for (ProfileCode c : profiles.codes()) {
    for (int k = 0; k < profiles.K(); ++k) out << (k ? "," : "") << (has_attribute(c, profiles.K(), k) ? 1 : 0);
    out << '\n';
  }
}

nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    int column = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(source, line, column, "invalid JSON");
  }
}

std::string read_text_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const std::string& path) { return parse_json(read_text_file(path), path); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

Hierarchy hierarchy_from_json(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object() || !j.contains("K") || !j["K"].is_number_integer()) {
    throw ParseError(source, 0, 0, "hierarchy needs an integer field \"K\"");
  }
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw ParseError(source, 0, 0, "\"edges\" must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
        throw ParseError(source, 0, 0, "each edge must be a pair of integers");
      }
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
  }
  return validate_hierarchy(j["K"].get<int>(), std::move(edges));
}

nlohmann::json to_json(const Hierarchy& h) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : h.edges()) edges.push_back({e.from, e.to});
  return {{"K", h.K()}, {"edges", edges}};
}

Hierarchy read_hierarchy_json(const std::string& path) { return hierarchy_from_json(read_json_file(path), path); }

namespace {

std::string pattern_bits(int pattern, int width) {
  std::string s(static_cast<std::size_t>(width), '0');
  for (int b = 0; b < width; ++b) {
    if (pattern & (1 << (width - 1 - b))) s[b] = '1';
  }
  return s;
}

}  // namespace

nlohmann::json params_to_json(const ItemParams& params, const QMatrix& q) {
  validate_params(params, q);
  if (params.kind != ModelKind::Gdina) {
    return {{"model", to_string(params.kind)}, {"slip", params.slip}, {"guess", params.guess}};
  }
  nlohmann::json items = nlohmann::json::array();
  for (int j = 0; j < q.J(); ++j) {
    const auto req = q.required_attributes(j);
    nlohmann::json required = nlohmann::json::array();
    for (int k : req) required.push_back(k + 1);
    nlohmann::json theta = nlohmann::json::object();
    for (std::size_t t = 0; t < params.tables[j].size(); ++t) {
      theta[pattern_bits(static_cast<int>(t), static_cast<int>(req.size()))] = params.tables[j][t];
    }
    items.push_back({{"required", required}, {"theta", theta}});
  }
  return {{"model", "gdina"}, {"items", items}};
}

ItemParams params_from_json(const nlohmann::json& j, const QMatrix& q) {
  try {
    const ModelKind kind = parse_model_kind(j.at("model").get<std::string>());
    ItemParams out;
    if (kind != ModelKind::Gdina) {
      out = ItemParams::dina(j.at("slip").get<std::vector<double>>(), j.at("guess").get<std::vector<double>>());
      out.kind = kind;
    } else {
      const auto& items = j.at("items");
      if (static_cast<int>(items.size()) != q.J()) throw DimensionMismatch("GDINA item count differs from J");
      std::vector<std::vector<double>> tables;
      for (int jj = 0; jj < q.J(); ++jj) {
        const int width = std::popcount(q.row_mask(jj));
        std::vector<double> t(std::size_t{1} << width);
        for (std::size_t p = 0; p < t.size(); ++p) {
          t[p] = items[jj].at("theta").at(pattern_bits(static_cast<int>(p), width)).get<double>();
        }
        tables.push_back(std::move(t));
      }
      out = ItemParams::gdina(std::move(tables));
    }
    validate_params(out, q);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("params", 0, 0, e.what());
  }
}

nlohmann::json to_json(const ProportionVector& p) {
  nlohmann::json profiles = nlohmann::json::array();
  for (ProfileCode c : p.support().codes()) profiles.push_back(profile_string(c, p.support().K()));
  return {{"profiles", profiles}, {"probs", p.probs()}};
}

nlohmann::json fit_to_json(const CdmFit& fit, const QMatrix& q) {
  nlohmann::json starts = nlohmann::json::array();
  for (const auto& s : fit.starts) {
    starts.push_back({{"start", s.start}, {"loglik", s.loglik}, {"iters", s.iters}, {"converged", s.converged}});
  }
  auto one_based = [](const std::vector<int>& v) {
    std::vector<int> out(v);
    for (int& x : out) ++x;
    return out;
  };
  return {{"schema", "hiercdm.fit/1"},
          {"model", to_string(fit.kind)},
          {"loglik", fit.loglik},
          {"iters", fit.iters},
          {"converged", fit.converged},
          {"n_free_params", fit.n_free_params},
          {"best_start", fit.best_start},
          {"params", params_to_json(fit.params, q)},
          {"proportions", to_json(fit.p)},
          {"starts", starts},
          {"flipped_items", one_based(fit.flipped_items)},
          {"constant_items", one_based(fit.constant_items)}};
}

FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base) {
  if (j.contains("max_iters")) base.max_iters = j["max_iters"].get<int>();
  if (j.contains("loglik_tol")) base.loglik_tol = j["loglik_tol"].get<double>();
  if (j.contains("n_starts")) base.n_starts = j["n_starts"].get<int>();
  if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("init_strategy")) {
    const auto s = j["init_strategy"].get<std::string>();
    if (s == "uniform") {
      base.init = InitStrategy::Uniform;
    } else if (s == "random") {
      base.init = InitStrategy::Random;
    } else {
      throw std::invalid_argument("init_strategy must be uniform or random");
    }
  }
  if (j.contains("eps")) base.eps = j["eps"].get<double>();
  validate_config(base);
  return base;
}

nlohmann::json to_json(const FitConfig& cfg) {
  return {{"max_iters", cfg.max_iters},
          {"loglik_tol", cfg.loglik_tol},
          {"n_starts", cfg.n_starts},
          {"seed", cfg.seed},
          {"init_strategy", cfg.init == InitStrategy::Uniform ? "uniform" : "random"},
          {"eps", cfg.eps}};
}

}  // namespace hiercdm
