#include "noncomp/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "noncomp/error.hpp"
#include "noncomp/io.hpp"

namespace noncomp::service {

const char* to_string(State s) {
  switch (s) {
    case State::Practice: return "practice";
    case State::Annotating: return "annotating";
    case State::Done: return "done";
    case State::Rejected: return "rejected";
  }
  return "practice";
}

namespace {

State parse_state(const std::string& s) {
  for (auto st : {State::Practice, State::Annotating, State::Done, State::Rejected}) {
    if (s == to_string(st)) return st;
  }
  throw Error(ErrorCode::Parse, "unknown session state '" + s + "'");
}

[[noreturn]] void io_fail(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::string content;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  std::size_t good = 0;
  std::size_t line_no = 0;
  while (good < content.size()) {
    const auto nl = content.find('\n', good);
    if (nl == std::string::npos) break;  // torn tail, never acknowledged
    ++line_no;
    const auto line = content.substr(good, nl - good);
    if (!line.empty()) {
      try {
        existing_.push_back(json::parse(line));
      } catch (const json::exception&) {
        throw Error(ErrorCode::Parse, path_.string() + " line " +
                                          std::to_string(line_no) +
                                          " is not valid JSON");
      }
    }
    good = nl + 1;
  }
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) io_fail("cannot open event log " + path_.string());
  if (good < content.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(good)) != 0) io_fail("truncate event log");
  }
}

EventLog::~EventLog() {
  if (fd_ >= 0) ::close(fd_);
}

void EventLog::append(const json& event) {
  const auto line = event.dump() + "\n";
  std::size_t done = 0;
  while (done < line.size()) {
    const auto n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("write event log");
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) io_fail("fsync event log");
}

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::vector<study::StudyDefinition> load_study_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::MissingInput, "study directory " + dir.string() +
                                             " does not exist");
  }
  const std::string suffix = "_batches.json";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<study::StudyDefinition> out;
  std::set<std::string> ids;
  for (const auto& f : files) {
    const auto name = f.filename().string();
    const auto practice = dir / (name.substr(0, name.size() - suffix.size()) +
                                 "_practice.json");
    if (!std::filesystem::exists(practice)) {
      throw Error(ErrorCode::MissingInput,
                  practice.string() + " is missing (needed by " + name + ")");
    }
    auto def = io::definition_from_json(io::load_json(f), io::load_json(practice));
    if (!ids.insert(def.study_id).second) {
      throw Error(ErrorCode::Validation, "duplicate study id " + def.study_id);
    }
    out.push_back(std::move(def));
  }
  return out;
}

namespace {

Reply reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }
Reply error(int status, const std::string& message) {
  return reply(status, {{"error", message}});
}

json item_payload(const study::ServedItem& item) {
  return {{"item_id", item.item_id},
          {"segments", item.segments},
          {"allow_flag", item.allow_flag}};
}

}  // namespace

Service::Service(std::vector<study::StudyDefinition> studies,
                 const std::filesystem::path& log_path, study::GateConfig gate,
                 Clock clock)
    : studies_(std::move(studies)),
      gate_(gate),
      clock_(std::move(clock)),
      log_(log_path) {
  for (const auto& e : log_.existing()) apply(e);
  // A crash between a response and its state change leaves a transition
  // pending; it is a pure function of the log, so finish it now.
  for (auto& [_, s] : sessions_) settle(s);
}

const study::StudyDefinition* Service::find_study(const std::string& id) const {
  for (const auto& s : studies_) {
    if (s.study_id == id) return &s;
  }
  return nullptr;
}

const std::vector<study::ServedItem>& Service::items_for(const Session& s) const {
  const auto* def = find_study(s.study_id);
  if (s.state == State::Practice) return def->practice;
  return def->batches.at(static_cast<std::size_t>(s.participant_slot));
}

void Service::apply(const json& e) {
  const auto kind = e.at("event").get<std::string>();
  const auto id = e.at("session_id").get<std::string>();
  if (kind == "session_created") {
    Session s;
    s.session_id = id;
    s.study_id = e.at("study_id").get<std::string>();
    s.token = e.at("token").get<std::string>();
    s.participant_slot = e.at("participant_slot").get<int>();
    if (!find_study(s.study_id)) {
      throw Error(ErrorCode::Validation, "event log names unknown study " + s.study_id);
    }
    by_token_[{s.study_id, s.token}] = id;
    sessions_[id] = std::move(s);
    return;
  }
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::Validation, "event log names unknown session " + id);
  }
  auto& s = it->second;
  if (kind == "response_recorded") {
    Recorded r{id, e.at("item_id").get<std::string>(), e.at("label").get<int>(),
               e.at("ungrammatical").get<bool>(), e.at("ts").get<std::int64_t>()};
    if (s.state == State::Practice) s.practice_responses.push_back(r.label);
    ++s.cursor;
    responses_.push_back(std::move(r));
  } else if (kind == "session_state_changed") {
    s.state = parse_state(e.at("to").get<std::string>());
    if (s.state == State::Annotating) s.cursor = 0;
    if (auto rep = e.find("report"); rep != e.end()) {
      study::QualityReport q;
      q.participant_id = id;
      q.mae = rep->at("mae").get<double>();
      if (!rep->at("spearman_rho").is_null()) {
        q.spearman_rho = rep->at("spearman_rho").get<double>();
      }
      q.pass = rep->at("pass").get<bool>();
      s.report = q;
    }
  } else {
    throw Error(ErrorCode::Parse, "unknown event '" + kind + "'");
  }
}

void Service::record(const json& event) {
  log_.append(event);
  apply(event);
}

void Service::settle(Session& s) {
  const auto* def = find_study(s.study_id);
  auto change = [&](State to, std::optional<study::QualityReport> report) {
    json e = {{"event", "session_state_changed"},
              {"session_id", s.session_id},
              {"from", to_string(s.state)},
              {"to", to_string(to)},
              {"ts", clock_()}};
    if (report) e["report"] = io::gate_to_json(*report);
    record(e);
  };
  if (s.state == State::Practice && s.cursor >= def->practice.size()) {
    if (def->practice.size() < 2) {
      change(State::Annotating, std::nullopt);
    } else {
      std::vector<int> refs;
      for (const auto& p : def->practice) refs.push_back(*p.reference);
      auto report = study::quality_gate(s.practice_responses, refs, gate_);
      report.participant_id = s.session_id;
      change(report.pass ? State::Annotating : State::Rejected, report);
    }
  }
  if (s.state == State::Annotating &&
      s.cursor >= def->batches.at(static_cast<std::size_t>(s.participant_slot)).size()) {
    change(State::Done, std::nullopt);
  }
}

json Service::feedback(const Session& s) const {
  const auto& practice = find_study(s.study_id)->practice;
  // Feedback refers to the latest practice answer while nothing newer exists.
  const bool latest = s.state == State::Practice || s.state == State::Rejected ||
                      (s.state == State::Annotating && s.cursor == 0);
  if (s.practice_responses.empty()) return nullptr;
  if (latest) {
    const auto k = s.practice_responses.size() - 1;
    return {{"item_id", practice[k].item_id},
            {"reference", *practice[k].reference},
            {"your_label", s.practice_responses[k]}};
  }
  return nullptr;
}

Reply Service::create_session(const std::string& body) {
  json req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return error(400, "body must be a JSON object");
  auto sid = req.find("study_id");
  auto tok = req.find("participant_token");
  if (sid == req.end() || !sid->is_string() || tok == req.end() ||
      !tok->is_string() || tok->get<std::string>().empty()) {
    return error(422, "study_id and participant_token are required strings");
  }
  const auto study_id = sid->get<std::string>();
  const auto token = tok->get<std::string>();
  const auto* def = find_study(study_id);
  if (!def) return error(404, "unknown study " + study_id);

  std::lock_guard lock(mutex_);
  auto payload = [&](const Session& s, bool resumed) {
    return json{{"session_id", s.session_id},
                {"participant_slot", s.participant_slot},
                {"practice_count", def->practice.size()},
                {"batch_size", def->batches[static_cast<std::size_t>(s.participant_slot)].size()},
                {"state", to_string(s.state)},
                {"resumed", resumed}};
  };
  if (auto it = by_token_.find({study_id, token}); it != by_token_.end()) {
    return reply(200, payload(sessions_.at(it->second), true));
  }
  std::set<int> taken;
  for (const auto& [_, s] : sessions_) {
    if (s.study_id == study_id) taken.insert(s.participant_slot);
  }
  int slot = 0;
  while (taken.count(slot)) ++slot;
  if (slot >= static_cast<int>(def->batches.size())) {
    return error(409, "no participant slots remaining in " + study_id);
  }
  const auto session_id = study_id + "-p" + std::to_string(slot);
  try {
    record({{"event", "session_created"},
            {"session_id", session_id},
            {"study_id", study_id},
            {"participant_slot", slot},
            {"token", token},
            {"ts", clock_()}});
  } catch (const std::system_error& e) {
    return error(500, e.what());
  }
  return reply(201, payload(sessions_.at(session_id), false));
}

Reply Service::next(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return error(404, "unknown session " + session_id);
  auto& s = it->second;
  try {
    settle(s);
  } catch (const std::system_error& e) {
    return error(500, e.what());
  }
  json out = {{"state", to_string(s.state)}};
  if (s.state == State::Practice || s.state == State::Annotating) {
    const auto& items = items_for(s);
    out["index"] = s.cursor;
    out["total"] = items.size();
    out["item"] = item_payload(items[s.cursor]);
  }
  if (s.state == State::Rejected && s.report) out["report"] = io::gate_to_json(*s.report);
  if (auto fb = feedback(s); !fb.is_null()) out["feedback"] = fb;
  return reply(200, out);
}

Reply Service::respond(const std::string& session_id, const std::string& body) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return error(404, "unknown session " + session_id);
  auto& s = it->second;
  try {
    settle(s);
  } catch (const std::system_error& e) {
    return error(500, e.what());
  }
  if (s.state == State::Done || s.state == State::Rejected) {
    return error(409, std::string("session is ") + to_string(s.state));
  }
  json req = json::parse(body, nullptr, false);
  if (req.is_discarded() || !req.is_object()) return error(400, "body must be a JSON object");
  auto item = req.find("item_id");
  if (item == req.end() || !item->is_string()) return error(422, "item_id is required");
  const auto& current = items_for(s)[s.cursor];
  if (item->get<std::string>() != current.item_id) {
    return reply(409, {{"error", "out-of-order item"}, {"expected", current.item_id}});
  }
  auto label = req.find("label");
  if (label == req.end() || !label->is_number_integer() || label->get<int>() < 0 ||
      label->get<int>() >= study::kNumLabels) {
    return error(422, "label must be an integer 0..6");
  }
  bool flag = false;
  if (auto f = req.find("ungrammatical"); f != req.end() && !f->is_null()) {
    if (!f->is_boolean()) return error(422, "ungrammatical must be a boolean");
    flag = f->get<bool>();
  }
  if (flag && !current.allow_flag) {
    return error(422, "item " + current.item_id + " does not take an ungrammaticality flag");
  }
  try {
    record({{"event", "response_recorded"},
            {"session_id", s.session_id},
            {"item_id", current.item_id},
            {"label", label->get<int>()},
            {"ungrammatical", flag},
            {"ts", clock_()}});
    settle(s);
  } catch (const std::system_error& e) {
    return error(500, e.what());
  }
  json out = {{"ok", true}, {"state", to_string(s.state)}, {"cursor", s.cursor}};
  if (auto fb = feedback(s); !fb.is_null()) out["feedback"] = fb;
  return reply(200, out);
}

Reply Service::export_responses(const std::string& study_id) {
  if (!find_study(study_id)) return error(404, "unknown study " + study_id);
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& r : responses_) {
    if (sessions_.at(r.session_id).study_id != study_id) continue;
    study::Response resp{r.session_id, r.item_id, r.label, r.ungrammatical, r.ts, false};
    out += io::response_to_json(resp).dump();
    out += '\n';
  }
  return {200, std::move(out), "application/x-ndjson"};
}

Reply Service::progress(const std::string& study_id) {
  const auto* def = find_study(study_id);
  if (!def) return error(404, "unknown study " + study_id);
  std::lock_guard lock(mutex_);
  std::map<int, const Session*> by_slot;
  for (const auto& [_, s] : sessions_) {
    if (s.study_id == study_id) by_slot[s.participant_slot] = &s;
  }
  json slots = json::array();
  std::map<std::string, int> counts;
  for (std::size_t slot = 0; slot < def->batches.size(); ++slot) {
    const auto total = def->batches[slot].size();
    json row = {{"participant_slot", slot}, {"total", total}};
    auto it = by_slot.find(static_cast<int>(slot));
    if (it == by_slot.end()) {
      row["state"] = "unassigned";
      row["completed"] = 0;
      row["session_id"] = nullptr;
    } else {
      const auto& s = *it->second;
      row["state"] = to_string(s.state);
      row["completed"] = s.state == State::Done ? total
                         : s.state == State::Annotating ? s.cursor : 0;
      row["session_id"] = s.session_id;
    }
    ++counts[row["state"].get<std::string>()];
    slots.push_back(std::move(row));
  }
  return reply(200, {{"study_id", study_id}, {"slots", std::move(slots)}, {"counts", counts}});
}

std::optional<Session> Service::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

}  // namespace noncomp::service
