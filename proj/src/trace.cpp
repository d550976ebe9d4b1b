#include "bds/search.hpp"

#include <fstream>
#include <sstream>

namespace bds {
namespace {

using nlohmann::json;

json to_array(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SamplePhase parse_phase(const std::string& s) {
  if (s == "init") return SamplePhase::kInit;
  if (s == "explore") return SamplePhase::kExplore;
  if (s == "exploit") return SamplePhase::kExploit;
  throw TraceError("unknown phase '" + s + "'");
}

TraceRecord parse_record(const json& j, std::size_t expected_index, std::size_t snapshot_count,
                         std::size_t input_dim, std::size_t feature_dim) {
  TraceRecord r;
  r.index = j.at("index").get<std::size_t>();
  if (r.index != expected_index)
    throw TraceError("sample index " + std::to_string(r.index) + " out of sequence (expected " +
                     std::to_string(expected_index) + ")");
  r.phase = parse_phase(j.at("phase").get<std::string>());
  if (!j.at("step").is_null()) r.step = j.at("step").get<std::size_t>();
  if ((r.phase == SamplePhase::kInit) == r.step.has_value())
    throw TraceError("sample " + std::to_string(r.index) + ": step must be set iff not init");
  r.x = to_vector(j.at("x"));
  if (static_cast<std::size_t>(r.x.size()) != input_dim)
    throw TraceError("sample " + std::to_string(r.index) + ": input dimension mismatch");
  const std::string status = j.at("status").get<std::string>();
  if (status == "ok") {
    r.f = to_vector(j.at("f"));
    if (static_cast<std::size_t>(r.f->size()) != feature_dim)
      throw TraceError("sample " + std::to_string(r.index) + ": feature dimension mismatch");
  } else if (status == "failed") {
    if (!j.at("f").is_null()) throw TraceError("failed sample carries a feature");
    r.error = j.at("error").get<std::string>();
  } else {
    throw TraceError("unknown sample status '" + status + "'");
  }
  if (!j.at("acquisition").is_null()) r.acquisition = j.at("acquisition").get<double>();
  if (!j.at("snapshot").is_null()) {
    r.snapshot = j.at("snapshot").get<std::size_t>();
    if (*r.snapshot >= snapshot_count) throw TraceError("sample references a missing snapshot");
  }
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  return r;
}

}  // namespace

std::string trace_header_line(const BdsTrace& trace) {
  json j = {{"type", "header"},
            {"schema_version", kTraceSchemaVersion},
            {"seed", trace.seed},
            {"feature_range", {{"lo", to_array(trace.feature_lo)}, {"hi", to_array(trace.feature_hi)}}},
            {"config", trace.config}};
  if (!trace.meta.is_null()) j["meta"] = trace.meta;
  return j.dump();
}

std::string trace_record_line(const TraceRecord& r, bool with_timing) {
  json j = {{"type", "sample"},
            {"index", r.index},
            {"step", r.step ? json(*r.step) : json(nullptr)},
            {"phase", to_string(r.phase)},
            {"x", to_array(r.x)},
            {"f", r.f ? to_array(*r.f) : json(nullptr)},
            {"status", r.ok() ? "ok" : "failed"},
            {"acquisition", r.acquisition ? json(*r.acquisition) : json(nullptr)},
            {"snapshot", r.snapshot ? json(*r.snapshot) : json(nullptr)}};
  if (!r.ok()) j["error"] = r.error;
  if (with_timing && r.wall_time) j["wall_time"] = *r.wall_time;
  return j.dump();
}

std::string trace_snapshot_line(std::size_t id, const nlohmann::json& snapshot) {
  return json{{"type", "snapshot"}, {"id", id}, {"model", snapshot}}.dump();
}

std::string trace_end_line(const BdsTrace& trace) {
  json j = {{"type", "end"}, {"status", trace.aborted ? "aborted" : "complete"}};
  if (trace.aborted) j["reason"] = trace.abort_reason;
  return j.dump();
}

std::string serialize_trace(const BdsTrace& trace, bool with_timing) {
  std::ostringstream out;
  out << trace_header_line(trace) << '\n';
  // Snapshots follow the successful sample that produced them.
  std::size_t next_snapshot = 0;
  for (const auto& r : trace.records) {
    out << trace_record_line(r, with_timing) << '\n';
    if (r.ok() && next_snapshot < trace.snapshots.size()) {
      out << trace_snapshot_line(next_snapshot, trace.snapshots[next_snapshot]) << '\n';
      ++next_snapshot;
    }
  }
  if (trace.complete || trace.aborted) out << trace_end_line(trace) << '\n';
  return out.str();
}

BdsTrace parse_trace(const std::string& text) {
  BdsTrace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool ended = false;
  std::size_t input_dim = 0;
  std::size_t feature_dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      if (ended) throw TraceError("content after the end line");
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw TraceError("first line must be the header");
        if (j.at("schema_version").get<int>() != kTraceSchemaVersion)
          throw TraceError("unsupported trace schema_version");
        trace.seed = j.at("seed").get<std::uint64_t>();
        trace.config = j.at("config");
        if (j.contains("meta")) trace.meta = j.at("meta");
        trace.feature_lo = to_vector(j.at("feature_range").at("lo"));
        trace.feature_hi = to_vector(j.at("feature_range").at("hi"));
        input_dim = trace.config.at("bounds").at("lower").size();
        feature_dim = static_cast<std::size_t>(trace.feature_lo.size());
        have_header = true;
      } else if (type == "sample") {
        trace.records.push_back(parse_record(j, trace.records.size(), trace.snapshots.size(),
                                             input_dim, feature_dim));
      } else if (type == "snapshot") {
        if (j.at("id").get<std::size_t>() != trace.snapshots.size())
          throw TraceError("snapshot id out of sequence");
        trace.snapshots.push_back(j.at("model"));
      } else if (type == "end") {
        const std::string status = j.at("status").get<std::string>();
        if (status == "complete") {
          trace.complete = true;
        } else if (status == "aborted") {
          trace.aborted = true;
          trace.abort_reason = j.value("reason", "");
        } else {
          throw TraceError("unknown end status '" + status + "'");
        }
        ended = true;
      } else {
        throw TraceError("unknown line type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw TraceError("trace line " + std::to_string(line_no) + ": " + e.what());
    } catch (const TraceError& e) {
      throw TraceError("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw TraceError("trace is empty or lacks a header");
  return trace;
}

BdsTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open trace file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

}  // namespace bds
