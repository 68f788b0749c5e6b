#include "subnet_hpo/journal.hpp"

#include <json.hpp>
#include <sstream>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

namespace {

using nlohmann::json;

json value_to_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

ParamValue value_from_json(const json& j, const std::string& name) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::parse_error, "config value '" + name + "' has an unsupported type");
}

GroupId group_from_label(const std::string& label) {
  auto g = GroupId::parse(label);
  if (!g) throw Error(ErrorCode::parse_error, "unknown group label '" + label + "'");
  return *g;
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

json parse_object(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed journal line: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "journal line is not an object");
  return j;
}

}  // namespace

std::string header_line(const JournalHeader& h) {
  json j = {{"type", "header"},     {"plan_digest", h.plan_digest},
            {"scheduler", h.scheduler}, {"seed", h.seed},
            {"fold", h.fold},       {"budget", h.budget}};
  return j.dump();
}

std::string journal_line(const TrialRecord& r) {
  json config = json::object();
  for (const auto& [name, value] : r.config) config[name] = value_to_json(value);
  json frozen = json::object();
  for (const auto& [g, src] : r.plan.frozen_sources) frozen[g.label()] = src;
  json states = json::object();
  for (const auto& [g, s] : r.states) {
    states[g.label()] = {{"quality", s.quality}, {"hash", to_hex64(s.trained_config_hash)}};
  }
  json j = {{"type", "trial"},
            {"id", r.id},
            {"branch", r.branch},
            {"plan", r.plan.kind == PlanKind::complete ? "complete" : "transfer"},
            {"frozen", frozen},
            {"config", config},
            {"l", r.loss},
            {"l_merge", r.merge_loss},
            {"l_groups", r.group_losses},
            {"states", states},
            {"cost", r.cost},
            {"cumulative_time", r.cumulative_time},
            {"rng_seed", to_hex64(r.rng_seed)},
            {"rng_state", to_hex64(r.rng_state)}};
  return j.dump();
}

JournalHeader parse_header_line(const std::string& line) {
  const json j = parse_object(line);
  try {
    if (field(j, "type") != "header") throw Error(ErrorCode::parse_error, "first line is not a header");
    JournalHeader h;
    h.plan_digest = field(j, "plan_digest").get<std::string>();
    h.scheduler = field(j, "scheduler").get<std::string>();
    h.seed = field(j, "seed").get<std::uint64_t>();
    h.fold = field(j, "fold").get<std::uint64_t>();
    h.budget = field(j, "budget").get<double>();
    return h;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad journal header: ") + e.what());
  }
}

TrialRecord parse_journal_line(const std::string& line) {
  const json j = parse_object(line);
  try {
    if (field(j, "type") != "trial") throw Error(ErrorCode::parse_error, "expected a trial line");
    TrialRecord r;
    r.id = field(j, "id").get<std::size_t>();
    r.branch = field(j, "branch").get<std::string>();
    const auto kind = field(j, "plan").get<std::string>();
    if (kind != "complete" && kind != "transfer") {
      throw Error(ErrorCode::parse_error, "unknown plan kind '" + kind + "'");
    }
    r.plan.kind = kind == "complete" ? PlanKind::complete : PlanKind::transfer;
    for (const auto& [label, src] : field(j, "frozen").items()) {
      r.plan.frozen_sources.emplace(group_from_label(label), src.get<std::size_t>());
    }
    for (const auto& [name, value] : field(j, "config").items()) {
      r.config.emplace(name, value_from_json(value, name));
    }
    r.loss = field(j, "l").get<double>();
    r.merge_loss = field(j, "l_merge").get<double>();
    r.group_losses = field(j, "l_groups").get<std::vector<double>>();
    for (const auto& [label, s] : field(j, "states").items()) {
      const GroupId g = group_from_label(label);
      r.states.emplace(g, QualityState{g, field(s, "quality").get<double>(),
                                       from_hex64(field(s, "hash").get<std::string>())});
    }
    r.cost = field(j, "cost").get<double>();
    r.cumulative_time = field(j, "cumulative_time").get<double>();
    r.rng_seed = from_hex64(field(j, "rng_seed").get<std::string>());
    r.rng_state = from_hex64(field(j, "rng_state").get<std::string>());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("bad trial line: ") + e.what());
  }
}

Journal read_journal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  Journal journal;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      journal.dropped_partial_line = true;
      break;
    }
    const std::string line = text.substr(pos, nl - pos);
    if (!have_header) {
      journal.header = parse_header_line(line);
      have_header = true;
    } else {
      journal.records.push_back(parse_journal_line(line));
    }
    pos = nl + 1;
    journal.valid_bytes = pos;
  }
  if (!have_header) throw Error(ErrorCode::parse_error, path.string() + " has no complete header");
  return journal;
}

JournalWriter JournalWriter::create(const std::filesystem::path& path, const JournalHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot create " + path.string());
  JournalWriter writer(path, std::move(out));
  writer.write_line(header_line(header));
  return writer;
}

JournalWriter JournalWriter::resume(const std::filesystem::path& path, std::uintmax_t valid_bytes) {
  std::error_code ec;
  std::filesystem::resize_file(path, valid_bytes, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot truncate " + path.string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::io_error, "cannot append to " + path.string());
  return JournalWriter(path, std::move(out));
}

void JournalWriter::append(const TrialRecord& record) { write_line(journal_line(record)); }

void JournalWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::io_error, "write failed on " + path_.string());
}

}  // namespace subnet_hpo
