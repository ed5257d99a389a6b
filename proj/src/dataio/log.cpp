// SPDX-FileCopyrightText: (c) 2026 erpkit contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "erpkit/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace erpkit::log {
namespace {
std::atomic<Level> g_level{Level::kWarn};
std::mutex g_mutex;
}  // namespace

void set_level(Level lvl) { g_level = lvl; }
Level level() { return g_level; }

void warn(std::string_view message) {
  if (g_level < Level::kWarn) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[erpkit] warning: " << message << '\n';
}

void info(std::string_view message) {
  if (g_level < Level::kInfo) return;
  std::lock_guard lock(g_mutex);
  std::clog << "[erpkit] " << message << '\n';
}

}  // namespace erpkit::log
