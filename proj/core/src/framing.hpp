#pragma once

// Header-line + float32 payload framing shared by every on-disk format.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace flexac::detail {

using ordered_json = nlohmann::ordered_json;

std::size_t write_frame(std::ostream& sink, const ordered_json& header,
                        std::span<const float> payload);

/// Reads and parses the header line, then checks magic and version == 1.
nlohmann::json read_header(std::istream& source, std::string_view magic);

/// Reads exactly `count` floats and requires end-of-stream afterwards.
std::vector<float> read_payload(std::istream& source, std::uint64_t count);

// Typed field access; all failures are MalformedHeader.
std::uint64_t get_count(const nlohmann::json& header, const char* key);
std::string get_string(const nlohmann::json& header, const char* key);

/// a * b * ..., or TruncatedPayload on uint64 overflow (the promise cannot be met).
std::uint64_t checked_product(std::initializer_list<std::uint64_t> factors);

void append_le(std::string& out, std::span<const float> values);

}  // namespace flexac::detail
