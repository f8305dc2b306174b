#pragma once

#include <string>

namespace cellrecon::log {

// Level is read once from CELLRECON_LOG={error,warn,info,debug}; default warn.
void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);

}  // namespace cellrecon::log
