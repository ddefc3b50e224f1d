#pragma once

#include <functional>
#include <string>

namespace zakai {

using WarningHandler = std::function<void(const std::string&)>;

/// Routes a non-fatal diagnostic. Defaults to stderr.
void warn(const std::string& message);

/// Like warn(), but each distinct message is emitted at most once per process.
void warn_once(const std::string& message);

/// Replaces the warning sink and returns the previous one. Not thread-safe with concurrent warn().
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace zakai
