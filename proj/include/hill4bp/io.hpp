#pragma once

// Shared output helpers: CSV number formatting and JSON sidecars.

#include <filesystem>
#include <string>

#include <json.hpp>

namespace hill4bp::io {

using json = nlohmann::ordered_json;

/// 17 significant digits, round-trippable.
std::string fmt(double v);

void write_text(const std::filesystem::path &path, const std::string &body);
void write_json(const std::filesystem::path &path, const json &j);

} // namespace hill4bp::io
