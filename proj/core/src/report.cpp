#include "opflow/report.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "opflow/version.hpp"

namespace opflow {

using nlohmann::json;

Report Report::assemble(std::vector<EntryResult> results, bool with_timings) {
  Report report;
  report.tool_version = kOpflowVersion;
  report.include_timings = with_timings;
  std::sort(results.begin(), results.end(),
            [](const EntryResult& a, const EntryResult& b) { return a.entry < b.entry; });
  report.entries = std::move(results);
  for (const auto& entry : report.entries)
    for (const auto& finding : entry.findings) report.totals[finding.vuln_class]++;
  return report;
}

namespace {

json finding_to_json(const Finding& f) {
  json sources = json::array();
  for (const auto& label : f.sources) {
    sources.push_back({{"kind", source_kind_name(label.kind)},
                       {"file", label.file},
                       {"line", label.line},
                       {"access_path", label.access_path}});
  }
  json trace = json::array();
  for (const auto& hop : f.trace)
    trace.push_back({{"file", hop.file}, {"line", hop.line}, {"description", hop.description}});
  return {{"vuln_class", vuln_class_name(f.vuln_class)},
          {"sink",
           {{"file", f.sink.file},
            {"line", f.sink.line},
            {"callee", f.sink.callee},
            {"arg_position", f.sink.arg_position}}},
          {"sources", std::move(sources)},
          {"trace", std::move(trace)}};
}

}  // namespace

std::string Report::to_json() const {
  json out;
  out["tool"] = {{"name", tool_name}, {"version", tool_version}};
  json entries_json = json::array();
  for (const auto& entry : entries) {
    json e;
    e["entry"] = entry.entry;
    json findings = json::array();
    for (const auto& f : entry.findings) findings.push_back(finding_to_json(f));
    e["findings"] = std::move(findings);
    json stats;
    stats["oplines_analyzed"] = entry.oplines_analyzed;
    if (include_timings) stats["wall_time_ms"] = entry.wall_ms;
    e["stats"] = std::move(stats);
    if (entry.failed) e["error"] = entry.error;
    entries_json.push_back(std::move(e));
  }
  out["entries"] = std::move(entries_json);
  json totals;
  for (VulnClass c : {VulnClass::XSS, VulnClass::SQLI, VulnClass::RCE, VulnClass::FI,
                      VulnClass::AFD, VulnClass::UFU, VulnClass::PT, VulnClass::SDE}) {
    auto it = totals_find(c);
    totals[vuln_class_name(c)] = it;
  }
  out["totals"] = std::move(totals);
  return out.dump(2) + "\n";
}

int Report::totals_find(VulnClass c) const {
  auto it = totals.find(c);
  return it == totals.end() ? 0 : it->second;
}

std::string Report::to_text() const {
  std::ostringstream out;
  out << tool_name << " " << tool_version << "\n";
  for (const auto& entry : entries) {
    out << "entry: " << entry.entry << "\n";
    if (entry.failed) out << "  error: " << entry.error << "\n";
    for (const auto& f : entry.findings) {
      out << "  [" << vuln_class_name(f.vuln_class) << "] " << f.sink.file << ":"
          << f.sink.line << " via " << f.sink.callee << " (arg " << f.sink.arg_position
          << ")\n";
      for (const auto& label : f.sources) {
        out << "    source: $_" << source_kind_name(label.kind);
        if (label.access_path != "*") out << "['" << label.access_path << "']";
        out << " at " << label.file << ":" << label.line << "\n";
      }
      for (const auto& hop : f.trace)
        out << "    - " << hop.file << ":" << hop.line << " " << hop.description << "\n";
    }
    out << "  stats: oplines_analyzed=" << entry.oplines_analyzed;
    if (include_timings) out << " wall_time_ms=" << entry.wall_ms;
    out << "\n";
  }
  out << "totals:";
  for (VulnClass c : {VulnClass::XSS, VulnClass::SQLI, VulnClass::RCE, VulnClass::FI,
                      VulnClass::AFD, VulnClass::UFU, VulnClass::PT, VulnClass::SDE})
    out << " " << vuln_class_name(c) << "=" << totals_find(c);
  out << "\n";
  return out.str();
}

}  // namespace opflow
