#pragma once

#include <iosfwd>
#include <string>

#include "matchci/dataset.hpp"
#include "matchci/protocol.hpp"
#include "matchci/roc.hpp"

namespace matchci {

// Score CSV with header id_a,instance_a,id_b,instance_b,score: one unordered
// comparison per row. Identities and their instances are indexed in order of
// first appearance. Self-pairs, duplicates in either orientation, and
// non-finite scores are rejected with the offending line number.
MatchDataset read_score_csv(std::istream& in, const std::string& name);
MatchDataset read_score_csv(const std::string& path);

// Embedding CSV with header id,instance,v0,...,v{d-1}: one instance per row.
// Scores are materialized as Euclidean distances between the rows.
MatchDataset read_embedding_csv(std::istream& in, const std::string& name);
MatchDataset read_embedding_csv(const std::string& path);

// Shortest decimal form that parses back to exactly the same double;
// infinities and NaN print as inf/-inf/nan.
std::string format_double(double value);

// threshold,far,frr rows over the whole grid, sentinels included.
void write_roc_csv(const EmpiricalRoc& roc, std::ostream& out);

// iteration,id_a,instance_a,id_b,instance_b rows with 1-based identities and
// instances.
void write_protocol_csv(const ProtocolPlan& plan, std::ostream& out);

}  // namespace matchci
