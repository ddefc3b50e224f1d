#include "zakai/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <set>
#include <utility>

namespace zakai {
namespace {

std::mutex g_mutex;

WarningHandler& handler() {
  static WarningHandler h = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(g_mutex);
  if (handler()) handler()(message);
}

void warn_once(const std::string& message) {
  static std::set<std::string> seen;
  std::lock_guard lock(g_mutex);
  if (!seen.insert(message).second) return;
  if (handler()) handler()(message);
}

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard lock(g_mutex);
  return std::exchange(handler(), std::move(h));
}

}  // namespace zakai
