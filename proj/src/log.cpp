#include "cellrecon/log.hpp"
#include "cellrecon/error.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace cellrecon {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoJumpDetected: return "NoJumpDetected";
    case ErrorCode::PartitionFailure: return "PartitionFailure";
    case ErrorCode::IncompleteWindow: return "IncompleteWindow";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyContour: return "EmptyContour";
    case ErrorCode::NoValidWindow: return "NoValidWindow";
    case ErrorCode::SingularLinearSystem: return "SingularLinearSystem";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::InsufficientValidRun: return "InsufficientValidRun";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

namespace log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto lg = spdlog::stderr_color_mt("cellrecon");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("CELLRECON_LOG")) {
      std::string s(env);
      if (s == "error") level = spdlog::level::err;
      else if (s == "warn") level = spdlog::level::warn;
      else if (s == "info") level = spdlog::level::info;
      else if (s == "debug") level = spdlog::level::debug;
    }
    lg->set_level(level);
    lg->set_pattern("[%l] %v");
    return lg;
  }();
  return instance;
}

}  // namespace

void debug(const std::string& msg) { logger()->debug(msg); }
void info(const std::string& msg) { logger()->info(msg); }
void warn(const std::string& msg) { logger()->warn(msg); }
void error(const std::string& msg) { logger()->error(msg); }

}  // namespace log
}  // namespace cellrecon
