// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace erpkit::log {

enum class Level { kQuiet = 0, kWarn = 1, kInfo = 2 };

/// Process-wide verbosity; messages go to standard error.
void set_level(Level level);
Level level();

void warn(std::string_view message);
void info(std::string_view message);

}  // namespace erpkit::log
