#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noncomp/study.hpp"

namespace noncomp::service {

using nlohmann::json;

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  json parsed() const { return json::parse(body); }
};

enum class State { Practice, Annotating, Done, Rejected };
const char* to_string(State s);

struct Session {
  std::string session_id;
  std::string study_id;
  std::string token;
  int participant_slot = 0;
  State state = State::Practice;
  std::size_t cursor = 0;              // next item within the current phase
  std::vector<int> practice_responses; // in practice order
  std::optional<study::QualityReport> report;
};

/// Append-only JSONL file. Each append is flushed and fsynced before it
/// returns. A torn final line (no newline, unparsable) is dropped on open.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Events present when the log was opened.
  const std::vector<json>& existing() const { return existing_; }
  void append(const json& event);

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::vector<json> existing_;
};

using Clock = std::function<std::int64_t()>;
std::int64_t wall_clock_ms();

/// Reads every `<name>_batches.json` with its `<name>_practice.json`.
std::vector<study::StudyDefinition> load_study_dir(const std::filesystem::path& dir);

class Service {
 public:
  Service(std::vector<study::StudyDefinition> studies,
          const std::filesystem::path& log_path, study::GateConfig gate = {},
          Clock clock = wall_clock_ms);

  Reply create_session(const std::string& body);
  Reply next(const std::string& session_id);
  Reply respond(const std::string& session_id, const std::string& body);
  Reply export_responses(const std::string& study_id);
  Reply progress(const std::string& study_id);

  std::optional<Session> session(const std::string& session_id) const;

 private:
  struct Recorded {
    std::string session_id;
    std::string item_id;
    int label = 0;
    bool ungrammatical = false;
    std::int64_t ts = 0;
  };

  const study::StudyDefinition* find_study(const std::string& id) const;
  const std::vector<study::ServedItem>& items_for(const Session& s) const;
  void apply(const json& event);
  void record(const json& event);
  void settle(Session& s);
  json feedback(const Session& s) const;

  std::vector<study::StudyDefinition> studies_;
  study::GateConfig gate_;
  Clock clock_;
  EventLog log_;
  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::map<std::pair<std::string, std::string>, std::string> by_token_;
  std::vector<Recorded> responses_;  // log order
};

/// Binds the service's endpoints to an HTTP listener.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  /// Port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace noncomp::service
