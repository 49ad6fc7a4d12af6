#include "bunching/errors.hpp"

#include <iostream>
#include <mutex>

namespace bunching {

namespace {
std::mutex g_warn_mutex;
WarningHandler& handler_slot() {
  static WarningHandler h = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return h;
}
}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  WarningHandler old = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return old;
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_warn_mutex);
  if (handler_slot()) handler_slot()(message);
}

}  // namespace bunching
