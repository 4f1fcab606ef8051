#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "common/events.hpp"
#include "harness/image.hpp"
#include "harness/session.hpp"

namespace wtt::harness {

std::string base64_encode(const std::uint8_t* data, std::size_t n);
std::string base64_encode(const std::vector<std::uint8_t>& bytes);
// Throws Error(Protocol) on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::vector<std::uint8_t> quantize_trail(const particles::TrailField& trail);
FrameView frame_view(const Session& s);

// {"t":"frame", ...}; `events` are those raised since the previous frame.
nlohmann::json frame_message(const Session& s, const std::vector<Event>& events);
// A frame message plus the solid mask; enough to re-render the frame.
nlohmann::json snapshot_document(const Session& s);
FrameView frame_view_from_snapshot(const nlohmann::json& snap);

nlohmann::json error_message(const std::string& msg);

struct LayoutCommand {
  std::vector<terrain::BlockSpec> blocks;
};
struct ModeCommand {
  modes::Mode mode;
  std::uint64_t seed;
};
using Command = std::variant<LayoutCommand, ModeCommand>;

// Parses one client line. Throws Error(Protocol) with a readable message.
Command parse_command(const std::string& line);

}  // namespace wtt::harness
