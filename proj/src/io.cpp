#include "matchci/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

namespace matchci {

namespace {

[[noreturn]] void fail(const std::string& name, std::int64_t line, const std::string& what) {
  throw ParseError(name + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(const std::string& field, const std::string& name, std::int64_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    fail(name, line, "not a number: '" + field + "'");
  if (!std::isfinite(value)) fail(name, line, "non-finite value: '" + field + "'");
  return value;
}

// Identity and instance indices in order of first appearance.
struct Roster {
  std::vector<std::string> identity_labels;
  std::vector<std::vector<std::string>> instance_labels;  // per identity
  std::map<std::string, int> identity_index;
  std::vector<std::map<std::string, int>> instance_index;

  std::pair<int, int> place(const std::string& id, const std::string& inst) {
    auto [it, fresh] = identity_index.try_emplace(id,
                                                  static_cast<int>(identity_labels.size()));
    if (fresh) {
      identity_labels.push_back(id);
      instance_labels.emplace_back();
      instance_index.emplace_back();
    }
    const int i = it->second;
    auto& insts = instance_index[static_cast<std::size_t>(i)];
    auto [jt, inst_fresh] =
        insts.try_emplace(inst, static_cast<int>(insts.size()));
    if (inst_fresh) instance_labels[static_cast<std::size_t>(i)].push_back(inst);
    return {i, jt->second};
  }

  void layout(MatchDataset& ds) const {
    ds.identity_labels = identity_labels;
    ds.offset.assign(1, 0);
    for (std::size_t i = 0; i < identity_labels.size(); ++i) {
      const int count = static_cast<int>(instance_labels[i].size());
      ds.m.push_back(count);
      ds.offset.push_back(ds.offset.back() + count);
      for (int k = 0; k < count; ++k) {
        ds.inst_identity.push_back(static_cast<int>(i));
        ds.instance_labels.push_back(instance_labels[i][static_cast<std::size_t>(k)]);
      }
    }
  }
};

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return in;
}

}  // namespace

MatchDataset read_score_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  std::int64_t line_no = 1;
  {
    const auto header = split_fields(line);
    const std::vector<std::string> expected{"id_a", "instance_a", "id_b", "instance_b",
                                            "score"};
    if (header != expected)
      fail(name, line_no, "expected header id_a,instance_a,id_b,instance_b,score");
  }

  struct Row {
    int a_id, a_inst, b_id, b_inst;
    double score;
    std::int64_t line;
  };
  Roster roster;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != 5)
      fail(name, line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    if (fields[0] == fields[2] && fields[1] == fields[3])
      fail(name, line_no, "a comparison must join two distinct instances");
    const auto [ai, ak] = roster.place(fields[0], fields[1]);
    const auto [bi, bk] = roster.place(fields[2], fields[3]);
    rows.push_back({ai, ak, bi, bk, parse_double(fields[4], name, line_no), line_no});
  }
  if (rows.empty()) throw ParseError(name + ": no data rows");

  MatchDataset ds;
  roster.layout(ds);
  const int n = ds.n_instances();
  ds.scores.setConstant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (const Row& row : rows) {
    const int a = ds.offset[static_cast<std::size_t>(row.a_id)] + row.a_inst;
    const int b = ds.offset[static_cast<std::size_t>(row.b_id)] + row.b_inst;
    if (!std::isnan(ds.scores(a, b)))
      fail(name, row.line, "duplicate comparison for (" + ds.instance_name(a) + ", " +
                               ds.instance_name(b) + ")");
    ds.scores(a, b) = row.score;
    ds.scores(b, a) = row.score;
  }
  ds.validate();
  return ds;
}

MatchDataset read_score_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return read_score_csv(in, path);
}

MatchDataset read_embedding_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name + ": empty file");
  std::int64_t line_no = 1;
  std::size_t dim = 0;
  {
    const auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "instance")
      fail(name, line_no, "expected header id,instance,v0,...");
    dim = header.size() - 2;
    for (std::size_t d = 0; d < dim; ++d)
      if (header[d + 2] != "v" + std::to_string(d))
        fail(name, line_no, "expected embedding column v" + std::to_string(d));
  }

  struct Row {
    int id, inst;
    std::vector<double> values;
    std::int64_t line;
  };
  Roster roster;
  std::vector<Row> rows;
  std::set<std::pair<int, int>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 2)
      fail(name, line_no,
           "expected " + std::to_string(dim + 2) + " fields, got " +
               std::to_string(fields.size()));
    const auto [i, k] = roster.place(fields[0], fields[1]);
    if (!seen.insert({i, k}).second)
      fail(name, line_no, "duplicate instance (" + fields[0] + ", " + fields[1] + ")");
    Row row{i, k, {}, line_no};
    for (std::size_t d = 0; d < dim; ++d)
      row.values.push_back(parse_double(fields[d + 2], name, line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(name + ": no data rows");

  MatchDataset ds;
  roster.layout(ds);
  ds.embeddings.resize(ds.n_instances(), static_cast<Eigen::Index>(dim));
  for (const Row& row : rows) {
    const int r = ds.offset[static_cast<std::size_t>(row.id)] + row.inst;
    for (std::size_t d = 0; d < dim; ++d)
      ds.embeddings(r, static_cast<Eigen::Index>(d)) = row.values[d];
  }
  ds.materialize_scores();
  ds.validate();
  return ds;
}

MatchDataset read_embedding_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return read_embedding_csv(in, path);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_roc_csv(const EmpiricalRoc& roc, std::ostream& out) {
  out << "threshold,far,frr\n";
  for (int k = 0; k < roc.size(); ++k)
    out << format_double(roc.thresholds[k]) << ',' << format_double(roc.far_at[k]) << ','
        << format_double(roc.frr_at[k]) << '\n';
}

void write_protocol_csv(const ProtocolPlan& plan, std::ostream& out) {
  out << "iteration,id_a,instance_a,id_b,instance_b\n";
  for (const ProtocolSelection& s : plan.selections)
    out << s.iteration << ',' << s.id_a + 1 << ',' << s.inst_a + 1 << ',' << s.id_b + 1
        << ',' << s.inst_b + 1 << '\n';
}

}  // namespace matchci
