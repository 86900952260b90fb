#include "mipform/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace mipform {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& msg) { throw Error(ErrorKind::ParseError, msg); }

const json& member(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) parse_fail(where + ": missing \"" + key + "\"");
  return *it;
}

Index as_index(const json& j, const std::string& where) {
  if (!j.is_number_integer()) parse_fail(where + " must be an integer");
  return j.get<Index>();
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) parse_fail(where + " must be finite");
  return x;
}

MatrixXd as_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) parse_fail(where + " must be a nonempty array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  MatrixXd m;
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || row.empty()) parse_fail(where + ": every row must be a nonempty array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      parse_fail(where + ": rows have different lengths");
    }
    for (Index c = 0; c < cols; ++c)
      m(i, c) = as_double(row[static_cast<std::size_t>(c)], where + " entry");
  }
  return m;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    parse_fail(std::string("invalid JSON: ") + e.what());
  }
}

StructureHint parse_hint(const std::string& s) {
  if (s == "upper") return StructureHint::Upper;
  if (s == "lower") return StructureHint::Lower;
  if (s == "gim1") return StructureHint::Gim1;
  if (s == "general") return StructureHint::General;
  parse_fail("unknown structure_hint \"" + s + "\"");
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j) {
  return j.is_null() ? std::nan("") : j.get<double>();
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BlockGenerator<double> parse_model(const std::string& json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) parse_fail("model must be a JSON object");

  const json& ls = member(doc, "level_sizes", "model");
  LevelSizes sizes;
  for (const json& m : member(ls, "prefix", "level_sizes")) {
    const Index v = as_index(m, "level size");
    if (v <= 0) parse_fail("level sizes must be positive");
    sizes.prefix.push_back(v);
  }
  sizes.tail = as_index(member(ls, "tail", "level_sizes"), "tail level size");
  if (sizes.tail <= 0) parse_fail("tail level size must be positive");
  const Index repeat_from = static_cast<Index>(sizes.prefix.size());

  using Key = std::pair<Index, Index>;
  auto explicit_blocks = std::make_shared<std::map<Key, MatrixXd>>();
  auto tail_blocks = std::make_shared<std::map<Index, MatrixXd>>();
  Index low = 0, high = 0;

  const json& blocks = member(doc, "blocks", "model");
  if (!blocks.is_array()) parse_fail("\"blocks\" must be an array");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const json& blk = blocks[b];
    const std::string where = "block " + std::to_string(b);
    if (!blk.is_object()) parse_fail(where + " must be an object");
    const Index offset = as_index(member(blk, "l_offset", where), where + " l_offset");
    MatrixXd entries = as_matrix(member(blk, "entries", where), where + " entries");
    const json& k = member(blk, "k", where);
    low = std::max(low, -offset);
    high = std::max(high, offset);
    if (k.is_string()) {
      if (k.get<std::string>() != "tail") parse_fail(where + ": k must be an integer or \"tail\"");
      if (!tail_blocks->emplace(offset, std::move(entries)).second)
        parse_fail(where + ": tail offset " + std::to_string(offset) + " defined twice");
    } else {
      const Index row = as_index(k, where + " k");
      if (row < 0 || row + offset < 0) parse_fail(where + ": block lies outside the generator");
      if (!explicit_blocks->emplace(Key{row, row + offset}, std::move(entries)).second)
        parse_fail(where + ": block (" + std::to_string(row) + "," +
                   std::to_string(row + offset) + ") defined twice");
    }
  }
  for (const auto& [key, m] : *explicit_blocks)
    if (key.first >= repeat_from && tail_blocks->count(key.second - key.first))
      parse_fail("block (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                 ") overlaps a tail definition");

  typename BlockGenerator<double>::Options opts;
  opts.band_low = low;
  opts.band_high = high;
  if (auto it = doc.find("structure_hint"); it != doc.end()) {
    if (!it->is_string()) parse_fail("structure_hint must be a string");
    opts.hint = parse_hint(it->get<std::string>());
  }

  auto provider = [sizes, repeat_from, explicit_blocks, tail_blocks](Index k, Index l) -> MatrixXd {
    if (auto it = explicit_blocks->find({k, l}); it != explicit_blocks->end()) return it->second;
    if (k >= repeat_from)
      if (auto it = tail_blocks->find(l - k); it != tail_blocks->end()) return it->second;
    return MatrixXd::Zero(sizes(k), sizes(l));
  };
  return BlockGenerator<double>(sizes, provider, opts);
}

BlockGenerator<double> load_model(const std::string& path) { return parse_model(read_file(path)); }

DriftCertificate parse_certificate(const std::string& json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) parse_fail("certificate must be a JSON object");
  DriftCertificate cert;
  cert.b = as_double(member(doc, "b", "certificate"), "b");
  const json& c = member(doc, "C", "certificate");
  if (!c.is_array()) parse_fail("\"C\" must be an array of states");
  for (const json& s : c) cert.C.insert(as_index(s, "state in C"));
  const json& f = member(doc, "f", "certificate");
  for (const json& x : member(f, "prefix", "f")) cert.f.prefix.push_back(as_double(x, "f value"));
  cert.f.tail_ratio = as_double(member(f, "tail_ratio", "f"), "tail_ratio");
  cert.f.tail_start = as_index(member(f, "tail_start", "f"), "tail_start");
  if (auto it = doc.find("v_description"); it != doc.end() && it->is_string())
    cert.v_description = it->get<std::string>();
  cert.check();
  return cert;
}

DriftCertificate load_certificate(const std::string& path) {
  return parse_certificate(read_file(path));
}

std::string to_json(const RunOutput& out, int indent) {
  json doc;
  doc["algorithm"] = out.algorithm;
  doc["status"] = out.status;
  doc["stage"] = out.stage;
  json levels = json::array();
  for (const auto& v : out.levels) {
    json row = json::array();
    for (Index j = 0; j < v.size(); ++j) row.push_back(number_or_null(v(j)));
    levels.push_back(std::move(row));
  }
  doc["levels"] = std::move(levels);
  if (out.has_report) {
    json stages = json::array();
    for (const auto& st : out.report.stages)
      stages.push_back({{"s", st.s},
                        {"tv_delta", number_or_null(st.tv_delta)},
                        {"elapsed", number_or_null(st.elapsed)},
                        {"inverse_count", st.inverse_count}});
    json report = {{"stages", std::move(stages)},
                   {"stop_reason", to_string(out.report.stop_reason)},
                   {"epsilon", number_or_null(out.report.epsilon)}};
    if (!out.report.failure.empty()) report["failure"] = out.report.failure;
    doc["report"] = std::move(report);
  }
  return doc.dump(indent);
}

RunOutput run_output_from_json(const std::string& json_text) {
  const json doc = parse_json(json_text);
  RunOutput out;
  try {
    out.algorithm = doc.at("algorithm").get<std::string>();
    out.status = doc.at("status").get<std::string>();
    out.stage = doc.at("stage").get<Index>();
    for (const json& row : doc.at("levels")) {
      RowVectorXd v(static_cast<Index>(row.size()));
      for (std::size_t j = 0; j < row.size(); ++j) v(static_cast<Index>(j)) = number_or_nan(row[j]);
      out.levels.push_back(std::move(v));
    }
    if (auto it = doc.find("report"); it != doc.end()) {
      out.has_report = true;
      for (const json& st : it->at("stages"))
        out.report.stages.push_back({st.at("s").get<Index>(), number_or_nan(st.at("tv_delta")),
                                     number_or_nan(st.at("elapsed")),
                                     st.at("inverse_count").get<Index>()});
      const std::string reason = it->at("stop_reason").get<std::string>();
      if (reason == "Converged") out.report.stop_reason = StopReason::Converged;
      else if (reason == "MaxLevelReached") out.report.stop_reason = StopReason::MaxLevelReached;
      else out.report.stop_reason = StopReason::NumericalFailure;
      out.report.epsilon = number_or_nan(it->at("epsilon"));
      if (auto f = it->find("failure"); f != it->end()) out.report.failure = f->get<std::string>();
    }
  } catch (const json::exception& e) {
    parse_fail(std::string("malformed result: ") + e.what());
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<RowVectorXd>& levels) {
  os << "level,phase,probability\n";
  char buf[64];
  for (std::size_t k = 0; k < levels.size(); ++k)
    for (Index j = 0; j < levels[k].size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", levels[k](j));
      os << k << ',' << j << ',' << buf << '\n';
    }
}

}  // namespace mipform
