#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "waltz/event.hpp"
#include "waltz/monitor.hpp"
#include "waltz/semantics.hpp"

namespace waltz {

// Trace files are JSON lines: a {"context_tree": [[child, parent], ...]}
// header, then one event object per line in stream order. Context tokens
// appear as their "ctx-<N>" labels; payloads as tagged values, e.g.
// {"tuple":[{"atom":"process"},{"int":10}]}.
void write_trace(std::ostream& os, const ContextTree& tree, const std::vector<Event>& events,
                 const ContextLabels& labels);

struct LoadedTrace {
  Trace trace;
  ContextTree tree;
  ContextLabels labels;
};

// Inverse of write_trace; IoFailure on anything malformed.
LoadedTrace read_trace(std::istream& is);
LoadedTrace read_trace_file(const std::string& path);

std::string event_to_json(const Event& e, const ContextLabels& labels);

void write_verdict_log(std::ostream& os, const std::vector<VerdictLogEntry>& entries,
                       const ContextLabels& labels);

}  // namespace waltz
