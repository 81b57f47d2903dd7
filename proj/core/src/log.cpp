#include "dualmixer/log.hpp"

#include <atomic>
#include <iostream>

namespace dualmixer::log {

namespace {
std::atomic<Level> current{Level::warning};
}

void set_level(Level l) { current.store(l); }
Level level() { return current.load(); }

void warning(std::string_view message) {
  if (current.load() >= Level::warning) std::cerr << "warning: " << message << '\n';
}

void info(std::string_view message) {
  if (current.load() >= Level::info) std::cerr << message << '\n';
}

}  // namespace dualmixer::log
