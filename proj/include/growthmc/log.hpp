#pragma once

#include <functional>
#include <string_view>

namespace growthmc {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a warning through the installed sink (stderr by default).
void warn(std::string_view message);

/// Installs a sink and returns the previous one. Passing an empty function
/// restores the stderr sink.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace growthmc
