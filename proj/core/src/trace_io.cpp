#include "waltz/trace_io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "waltz/errors.hpp"

namespace waltz {

namespace {

using nlohmann::json;

json term_to_json(const Term& t) {
  struct V {
    json operator()(const Term::Atom& a) const { return json{{"atom", a.name}}; }
    json operator()(std::int64_t v) const { return json{{"int", v}}; }
    json operator()(const Term::Ref& r) const { return json{{"ref", r.id}}; }
    json operator()(const Term::Pid& p) const {
      return json{{"pid", {p.node, p.serial, p.seq}}};
    }
    json operator()(const Term::Tuple& elems) const {
      json arr = json::array();
      for (const auto& e : elems) arr.push_back(term_to_json(e));
      return json{{"tuple", std::move(arr)}};
    }
  };
  return std::visit(V{}, t.value);
}

Term json_to_term(const json& j) {
  if (!j.is_object() || j.size() != 1) throw IoFailure("bad term encoding: " + j.dump());
  if (j.contains("atom")) return Term::atom(j["atom"].get<std::string>());
  if (j.contains("int")) return Term::integer(j["int"].get<std::int64_t>());
  if (j.contains("ref")) return Term::ref(Term::Ref{j["ref"].get<std::uint64_t>()});
  if (j.contains("pid")) {
    const auto& p = j["pid"];
    if (!p.is_array() || p.size() != 3) throw IoFailure("bad pid encoding: " + j.dump());
    return Term::pid(Term::Pid{p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>(),
                               p[2].get<std::uint32_t>()});
  }
  if (j.contains("tuple")) {
    Term::Tuple elems;
    for (const auto& e : j["tuple"]) elems.push_back(json_to_term(e));
    return Term::tuple(std::move(elems));
  }
  throw IoFailure("bad term encoding: " + j.dump());
}

std::string label_or_throw(const ContextLabels& labels, const Context& c) {
  auto label = labels.label_of(c);
  if (!label) throw IoFailure("context token without a label: " + std::to_string(c.token.id));
  return *label;
}

json event_json(const Event& e, const ContextLabels& labels) {
  return json{{"from", e.from},
              {"to", e.to},
              {"payload", term_to_json(e.payload)},
              {"context", label_or_throw(labels, e.context)}};
}

json bindings_json(const Bindings& b) {
  json out = json::object();
  for (const auto& [name, value] : b) out[name] = term_to_json(value);
  return out;
}

}  // namespace

void write_trace(std::ostream& os, const ContextTree& tree, const std::vector<Event>& events,
                 const ContextLabels& labels) {
  json edges = json::array();
  for (const auto& [child, parent] : tree.edges())
    edges.push_back({label_or_throw(labels, child), label_or_throw(labels, parent)});
  os << json{{"context_tree", std::move(edges)}}.dump() << "\n";
  for (const auto& e : events) os << event_json(e, labels).dump() << "\n";
}

std::string event_to_json(const Event& e, const ContextLabels& labels) {
  return event_json(e, labels).dump();
}

LoadedTrace read_trace(std::istream& is) {
  LoadedTrace out;

  std::string line;
  if (!std::getline(is, line)) throw IoFailure("empty trace file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoFailure(std::string("bad trace header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("context_tree"))
    throw IoFailure("trace file does not start with a context_tree header");

  auto resolve = [&](const std::string& label) -> Context {
    if (auto c = out.labels.find(label)) return *c;
    Context c = Context::fresh();
    out.labels.assign(c, label);
    return c;
  };

  try {
    for (const auto& edge : header["context_tree"]) {
      if (!edge.is_array() || edge.size() != 2) throw IoFailure("bad context_tree edge");
      Context child = resolve(edge[0].get<std::string>());
      Context parent = resolve(edge[1].get<std::string>());
      out.tree.add(child, parent);
    }
  } catch (const IoFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw IoFailure(std::string("bad context_tree header: ") + e.what());
  }

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoFailure("bad event on line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("from") || !j.contains("to") || !j.contains("payload") ||
        !j.contains("context"))
      throw IoFailure("bad event on line " + std::to_string(line_no));
    try {
      std::string label = j["context"].get<std::string>();
      auto ctx = out.labels.find(label);
      if (!ctx) throw IoFailure("event on line " + std::to_string(line_no) +
                                " uses unrecorded context " + label);
      out.trace.events.push_back(Event{j["from"].get<std::string>(), j["to"].get<std::string>(),
                                       json_to_term(j["payload"]), *ctx});
    } catch (const IoFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw IoFailure("bad event on line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

LoadedTrace read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open trace file " + path);
  return read_trace(in);
}

void write_verdict_log(std::ostream& os, const std::vector<VerdictLogEntry>& entries,
                       const ContextLabels& labels) {
  for (const auto& entry : entries) {
    json j{{"ts_us", entry.ts_us}, {"verdict", to_string(entry.verdict)}};
    if (entry.context) j["context"] = label_or_throw(labels, *entry.context);
    if (entry.violation) {
      j["context"] = label_or_throw(labels, entry.violation->context);
      j["step"] = entry.violation->step_index;
      j["event"] = event_json(entry.violation->event, labels);
      j["bindings"] = bindings_json(entry.violation->bindings);
    }
    os << j.dump() << "\n";
  }
}

}  // namespace waltz
