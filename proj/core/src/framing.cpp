#include "framing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "flexac/errors.hpp"

namespace flexac::detail {

namespace {

constexpr std::size_t kMaxHeaderBytes = std::size_t{1} << 28;
constexpr std::size_t kChunkFloats = std::size_t{1} << 18;

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
    }
}

}  // namespace

void append_le(std::string& out, std::span<const float> values) {
    const std::size_t base = out.size();
    out.resize(base + values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(values[i]));
        std::memcpy(out.data() + base + i * 4, &bits, 4);
    }
}

std::size_t write_frame(std::ostream& sink, const ordered_json& header,
                        std::span<const float> payload) {
    std::string bytes = header.dump();
    bytes.push_back('\n');
    append_le(bytes, payload);
    sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!sink) {
        fail(ErrorCode::Io, "write failed");
    }
    return bytes.size();
}

nlohmann::json read_header(std::istream& source, std::string_view magic) {
    std::string line;
    char c = 0;
    bool terminated = false;
    while (source.get(c)) {
        if (c == '\n') {
            terminated = true;
            break;
        }
        if (line.size() >= kMaxHeaderBytes) {
            fail(ErrorCode::MalformedHeader, "header line exceeds size limit");
        }
        line.push_back(c);
    }
    if (!terminated) {
        fail(ErrorCode::MalformedHeader, "missing header line terminator");
    }

    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object()) {
        fail(ErrorCode::MalformedHeader, "header is not a JSON object");
    }
    const auto found = header.find("magic");
    if (found == header.end() || !found->is_string() || found->get<std::string>() != magic) {
        fail(ErrorCode::BadMagic, "expected magic \"" + std::string(magic) + "\"");
    }
    const auto version = header.find("version");
    if (version == header.end() || !version->is_number_integer()) {
        fail(ErrorCode::MalformedHeader, "version missing or not an integer");
    }
    if (version->get<std::int64_t>() != 1) {
        fail(ErrorCode::VersionUnsupported, "version " + version->dump());
    }
    return header;
}

std::uint64_t get_count(const nlohmann::json& header, const char* key) {
    const auto it = header.find(key);
    if (it == header.end() || !it->is_number_unsigned()) {
        fail(ErrorCode::MalformedHeader, std::string("field \"") + key +
                                             "\" missing or not a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

std::string get_string(const nlohmann::json& header, const char* key) {
    const auto it = header.find(key);
    if (it == header.end() || !it->is_string()) {
        fail(ErrorCode::MalformedHeader, std::string("field \"") + key + "\" missing or not a string");
    }
    return it->get<std::string>();
}

std::uint64_t checked_product(std::initializer_list<std::uint64_t> factors) {
    std::uint64_t acc = 1;
    for (std::uint64_t f : factors) {
        if (f != 0 && acc > UINT64_MAX / 4 / f) {
            fail(ErrorCode::TruncatedPayload, "declared payload size overflows");
        }
        acc *= f;
    }
    return acc;
}

std::vector<float> read_payload(std::istream& source, std::uint64_t count) {
    std::vector<float> out;
    std::vector<char> buffer;
    std::uint64_t remaining = count;
    while (remaining > 0) {
        const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunkFloats));
        buffer.resize(want * 4);
        source.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const auto got = static_cast<std::size_t>(source.gcount());
        if (got != buffer.size()) {
            fail(ErrorCode::TruncatedPayload,
                 "payload has " + std::to_string((count - remaining) * 4 + got) + " bytes, header promised " +
                     std::to_string(count * 4));
        }
        const std::size_t base = out.size();
        out.resize(base + want);
        for (std::size_t i = 0; i < want; ++i) {
            std::uint32_t bits = 0;
            std::memcpy(&bits, buffer.data() + i * 4, 4);
            const float v = std::bit_cast<float>(to_le(bits));
            if (!std::isfinite(v)) {
                fail(ErrorCode::NonFinite, "payload float " + std::to_string(base + i) + " is not finite");
            }
            out[base + i] = v;
        }
        remaining -= want;
    }
    if (source.peek() != std::char_traits<char>::eof()) {
        fail(ErrorCode::TruncatedPayload, "trailing bytes after declared payload");
    }
    return out;
}

}  // namespace flexac::detail
