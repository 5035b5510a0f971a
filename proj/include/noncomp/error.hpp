#pragma once

#include <stdexcept>
#include <string>

namespace noncomp {

enum class ErrorCode {
  Structural,     // malformed tree / parent pointers
  MissingPhrase,  // tree phrase absent from dictionary
  Coverage,       // sidecar or prediction coverage gaps
  Validation,     // out-of-range values, bad curation rows, bad responses
  Infeasible,     // e.g. fewer participants than annotations per item
  MissingInput,   // prerequisite file or stage output absent
  Parse,          // unreadable row / document
  Config,         // unknown or ill-typed config key
  Undefined,      // statistic undefined for the given data
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace noncomp
