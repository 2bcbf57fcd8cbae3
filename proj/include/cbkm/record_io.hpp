#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbkm/errors.hpp"
#include "cbkm/evaluation.hpp"
#include "cbkm/ground_truth.hpp"
#include "cbkm/waveform.hpp"

namespace cbkm {

/// On-disk record: header plus equally long named channels (f32 payload).
struct RawRecord {
    std::uint16_t version = 1;
    double fs_hz = 0.0;
    std::int64_t op_number = 0;
    double t0_offset_ms = 0.0;
    std::vector<std::pair<std::string, std::vector<float>>> channels;
};

/// Channel-name to role assignment; adapts external datasets' layouts.
struct ChannelMap {
    std::string vibration = "vib";
    std::string contact_a = "contact_A";
    std::string contact_b = "contact_B";
    std::string contact_c = "contact_C";
};

enum class RecordFormat { binary, csv };

namespace detail {

constexpr char kMagic[4] = {'C', 'B', 'K', 'M'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kMaxChannels = 64;
constexpr std::size_t kMaxNameLen = 4096;

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Cursor {
public:
    Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
    std::size_t offset() const { return pos_; }
    void need(std::size_t n, const char* what) const {
        if (pos_ + n > size_) throw ParseError(std::string("truncated record: ") + what, pos_);
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64(const char* what) {
        std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    float f32(const char* what) {
        need(4, what);
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string bytes(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline void validate_record(const RawRecord& rec) {
    if (rec.channels.empty()) throw DataError("record has no channels");
    if (!(rec.fs_hz > 0.0)) throw DataError("record sampling rate must be positive");
    const std::size_t len = rec.channels.front().second.size();
    if (len == 0) throw DataError("record channel '" + rec.channels.front().first + "' is empty");
    for (const auto& [name, data] : rec.channels) {
        if (data.size() != len)
            throw DataError("channel length mismatch: '" + rec.channels.front().first + "' has " +
                            std::to_string(len) + " samples, '" + name + "' has " +
                            std::to_string(data.size()));
        for (float v : data) {
            if (!std::isfinite(v)) throw DataError("non-finite sample in channel '" + name + "'");
        }
    }
}

} // namespace detail

/// Serialize to the compact binary layout (all little-endian):
/// magic "CBKM" | version u16 | fs f64 | op_number i64 | t0_offset_ms f64 |
/// channel_count u16 | per channel: name_len u16 + UTF-8 name |
/// samples_per_channel u64 | channel_count blocks of f32 samples.
inline std::string encode_record_binary(const RawRecord& rec) {
    detail::validate_record(rec);
    std::string out;
    out.append(detail::kMagic, 4);
    detail::put_u16(out, rec.version);
    detail::put_f64(out, rec.fs_hz);
    detail::put_u64(out, static_cast<std::uint64_t>(rec.op_number));
    detail::put_f64(out, rec.t0_offset_ms);
    detail::put_u16(out, static_cast<std::uint16_t>(rec.channels.size()));
    for (const auto& [name, data] : rec.channels) {
        detail::put_u16(out, static_cast<std::uint16_t>(name.size()));
        out.append(name);
    }
    detail::put_u64(out, rec.channels.front().second.size());
    for (const auto& [name, data] : rec.channels) {
        for (float v : data) detail::put_f32(out, v);
    }
    return out;
}

inline RawRecord decode_record_binary(const std::uint8_t* data, std::size_t size) {
    detail::Cursor cur(data, size);
    const std::string magic = cur.bytes(4, "magic");
    if (std::memcmp(magic.data(), detail::kMagic, 4) != 0)
        throw ParseError("bad magic, not a CBKM record", 0);
    RawRecord rec;
    rec.version = cur.u16("version");
    if (rec.version != detail::kVersion)
        throw ParseError("unknown record version " + std::to_string(rec.version), cur.offset() - 2);
    rec.fs_hz = cur.f64("sampling rate");
    if (!(rec.fs_hz > 0.0) || !std::isfinite(rec.fs_hz))
        throw ParseError("sampling rate must be positive and finite", cur.offset() - 8);
    rec.op_number = static_cast<std::int64_t>(cur.u64("op number"));
    rec.t0_offset_ms = cur.f64("t0 offset");
    if (!std::isfinite(rec.t0_offset_ms))
        throw ParseError("non-finite t0 offset", cur.offset() - 8);
    const std::uint16_t n_channels = cur.u16("channel count");
    if (n_channels == 0 || n_channels > detail::kMaxChannels)
        throw ParseError("channel count out of range: " + std::to_string(n_channels),
                         cur.offset() - 2);
    std::vector<std::string> names;
    for (std::uint16_t i = 0; i < n_channels; ++i) {
        const std::uint16_t len = cur.u16("channel name length");
        if (len == 0 || len > detail::kMaxNameLen)
            throw ParseError("channel name length out of range", cur.offset() - 2);
        names.push_back(cur.bytes(len, "channel name"));
    }
    const std::uint64_t n_samples = cur.u64("sample count");
    if (n_samples == 0 || n_samples > cur.remaining() / 4 / n_channels ||
        n_samples * 4ull * n_channels != cur.remaining())
        throw ParseError("sample payload size mismatch (declared " + std::to_string(n_samples) +
                             " samples x " + std::to_string(n_channels) + " channels)",
                         cur.offset());
    for (const auto& name : names) {
        std::vector<float> ch(n_samples);
        for (std::uint64_t i = 0; i < n_samples; ++i) {
            const std::size_t at = cur.offset();
            ch[i] = cur.f32("sample");
            if (!std::isfinite(ch[i]))
                throw ParseError("non-finite sample in channel '" + name + "'", at);
        }
        rec.channels.emplace_back(name, std::move(ch));
    }
    return rec;
}

/// Text layout: `# key=value` header lines (format, version, fs_hz,
/// op_number, t0_offset_ms, channels), then one comma-separated row per
/// sample, one column per channel.
inline std::string encode_record_csv(const RawRecord& rec) {
    detail::validate_record(rec);
    std::ostringstream out;
    out << "# format=cbkm-record\n";
    out << "# version=" << rec.version << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", rec.fs_hz);
    out << "# fs_hz=" << buf << "\n";
    out << "# op_number=" << rec.op_number << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", rec.t0_offset_ms);
    out << "# t0_offset_ms=" << buf << "\n";
    out << "# channels=";
    for (std::size_t i = 0; i < rec.channels.size(); ++i) {
        if (i) out << ",";
        out << rec.channels[i].first;
    }
    out << "\n";
    const std::size_t len = rec.channels.front().second.size();
    for (std::size_t row = 0; row < len; ++row) {
        for (std::size_t c = 0; c < rec.channels.size(); ++c) {
            if (c) out << ",";
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(rec.channels[c].second[row]));
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

inline RawRecord decode_record_csv(const std::string& text) {
    RawRecord rec;
    std::map<std::string, std::string> header;
    std::vector<std::string> names;
    std::size_t pos = 0;
    std::size_t line_start = 0;

    const auto next_line = [&](std::string& line) -> bool {
        if (pos >= text.size()) return false;
        line_start = pos;
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            line = text.substr(pos);
            pos = text.size();
        } else {
            line = text.substr(pos, nl - pos);
            pos = nl + 1;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    std::string line;
    std::vector<std::vector<float>> columns;
    bool in_header = true;
    while (next_line(line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (!in_header) throw ParseError("header line after data", line_start);
            std::string body = line.substr(1);
            const std::size_t eq = body.find('=');
            if (eq == std::string::npos) throw ParseError("malformed header line", line_start);
            std::string key = body.substr(0, eq);
            while (!key.empty() && key.front() == ' ') key.erase(key.begin());
            header[key] = body.substr(eq + 1);
            continue;
        }
        if (in_header) {
            in_header = false;
            if (header.count("format") && header["format"] != "cbkm-record")
                throw ParseError("unknown format '" + header["format"] + "'", 0);
            try {
                rec.version = header.count("version")
                                  ? static_cast<std::uint16_t>(std::stoul(header.at("version")))
                                  : detail::kVersion;
                rec.fs_hz = std::stod(header.at("fs_hz"));
                rec.op_number = header.count("op_number") ? std::stoll(header.at("op_number")) : 0;
                rec.t0_offset_ms =
                    header.count("t0_offset_ms") ? std::stod(header.at("t0_offset_ms")) : 0.0;
            } catch (const std::exception&) {
                throw ParseError("missing or malformed header values", line_start);
            }
            if (rec.version != detail::kVersion)
                throw ParseError("unknown record version " + std::to_string(rec.version),
                                 line_start);
            if (!(rec.fs_hz > 0.0) || !std::isfinite(rec.fs_hz))
                throw ParseError("sampling rate must be positive and finite", line_start);
            if (!header.count("channels"))
                throw ParseError("missing channels header", line_start);
            std::istringstream ss(header["channels"]);
            std::string name;
            while (std::getline(ss, name, ',')) {
                if (name.empty()) throw ParseError("empty channel name", line_start);
                names.push_back(name);
            }
            if (names.empty() || names.size() > detail::kMaxChannels)
                throw ParseError("channel count out of range", line_start);
            columns.resize(names.size());
        }
        // Data row.
        std::size_t col = 0;
        std::size_t field_start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (col >= names.size())
                    throw ParseError("too many columns in data row", line_start);
                const std::string field = line.substr(field_start, i - field_start);
                try {
                    std::size_t used = 0;
                    const float v = std::stof(field, &used);
                    if (used != field.size()) throw std::invalid_argument("trailing");
                    if (!std::isfinite(v)) throw std::invalid_argument("nonfinite");
                    columns[col].push_back(v);
                } catch (const std::exception&) {
                    throw ParseError("malformed sample value '" + field + "'",
                                     line_start + field_start);
                }
                ++col;
                field_start = i + 1;
            }
        }
        if (col != names.size())
            throw ParseError("expected " + std::to_string(names.size()) + " columns, got " +
                                 std::to_string(col),
                             line_start);
    }
    if (in_header) throw ParseError("no data rows", text.size());
    for (std::size_t i = 0; i < names.size(); ++i)
        rec.channels.emplace_back(names[i], std::move(columns[i]));
    if (rec.channels.front().second.empty()) throw ParseError("no data rows", text.size());
    return rec;
}

inline void write_record(const RawRecord& rec, const std::filesystem::path& path,
                         RecordFormat format) {
    const std::string bytes =
        format == RecordFormat::binary ? encode_record_binary(rec) : encode_record_csv(rec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

/// Read a record, sniffing the format from the leading magic bytes.
inline RawRecord read_raw_record(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), detail::kMagic, 4) == 0) {
        RawRecord rec =
            decode_record_binary(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
        detail::validate_record(rec);
        return rec;
    }
    RawRecord rec = decode_record_csv(bytes);
    detail::validate_record(rec);
    return rec;
}

/// Map named channels onto an operation record. The vibration channel is
/// required; contact channels are picked up when present.
inline OperationRecord to_operation_record(const RawRecord& raw, const ChannelMap& map = {}) {
    OperationRecord op;
    op.op_number = raw.op_number;
    bool have_vibration = false;
    for (const auto& [name, data] : raw.channels) {
        if (name == map.vibration) {
            op.vibration.samples.assign(data.begin(), data.end());
            op.vibration.sampling_rate_hz = raw.fs_hz;
            op.vibration.t0_offset_ms = raw.t0_offset_ms;
            have_vibration = true;
        } else {
            Pole pole;
            if (name == map.contact_a) pole = Pole::A;
            else if (name == map.contact_b) pole = Pole::B;
            else if (name == map.contact_c) pole = Pole::C;
            else continue; // unmapped channel (e.g. coil current): ignored
            ContactChannel ch;
            ch.pole = pole;
            ch.voltage.assign(data.begin(), data.end());
            ch.sampling_rate_hz = raw.fs_hz;
            ch.t0_offset_ms = raw.t0_offset_ms;
            op.contacts.push_back(std::move(ch));
        }
    }
    if (!have_vibration)
        throw DataError("record has no channel named '" + map.vibration + "' (vibration role)");
    return op;
}

inline RawRecord from_operation_record(const OperationRecord& op, const ChannelMap& map = {}) {
    RawRecord raw;
    raw.fs_hz = op.vibration.sampling_rate_hz;
    raw.op_number = op.op_number;
    raw.t0_offset_ms = op.vibration.t0_offset_ms;
    raw.channels.emplace_back(map.vibration,
                              std::vector<float>(op.vibration.samples.begin(),
                                                 op.vibration.samples.end()));
    for (const auto& ch : op.contacts) {
        const std::string name = ch.pole == Pole::A   ? map.contact_a
                                 : ch.pole == Pole::B ? map.contact_b
                                                      : map.contact_c;
        raw.channels.emplace_back(name,
                                  std::vector<float>(ch.voltage.begin(), ch.voltage.end()));
    }
    return raw;
}

inline OperationRecord read_record(const std::filesystem::path& path, const ChannelMap& map = {}) {
    return to_operation_record(read_raw_record(path), map);
}

} // namespace cbkm
