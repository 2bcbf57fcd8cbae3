#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "cbkm/record_io.hpp"
#include "cbkm/synth.hpp"

using namespace cbkm;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

RawRecord sample_record(std::size_t n = 1200, double fs = 300000.0) {
    RawRecord rec;
    rec.fs_hz = fs;
    rec.op_number = 42;
    rec.t0_offset_ms = 0.0;
    rng::Gaussian g(5);
    std::vector<float> vib(n), contact(n);
    for (std::size_t i = 0; i < n; ++i) {
        vib[i] = static_cast<float>(0.1 * g.next());
        contact[i] = i < n / 2 ? 1.0f : 0.0f;
    }
    rec.channels.emplace_back("vib", vib);
    rec.channels.emplace_back("contact_A", contact);
    return rec;
}

fs::path temp_file(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "cbkm_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("binary round trip is bit exact", "[io]") {
    const auto rec = sample_record();
    const auto path = temp_file("roundtrip.cbkm");
    write_record(rec, path, RecordFormat::binary);
    const auto back = read_raw_record(path);
    CHECK(back.version == rec.version);
    CHECK(back.fs_hz == rec.fs_hz);
    CHECK(back.op_number == rec.op_number);
    REQUIRE(back.channels.size() == rec.channels.size());
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        CHECK(back.channels[c].first == rec.channels[c].first);
        REQUIRE(back.channels[c].second == rec.channels[c].second); // f32 payload, bitwise
    }
}

TEST_CASE("csv round trip is within f32 quantization", "[io]") {
    const auto rec = sample_record(400);
    const auto path = temp_file("roundtrip.csv");
    write_record(rec, path, RecordFormat::csv);
    const auto back = read_raw_record(path);
    REQUIRE(back.channels.size() == rec.channels.size());
    for (std::size_t c = 0; c < rec.channels.size(); ++c) {
        REQUIRE(back.channels[c].second.size() == rec.channels[c].second.size());
        for (std::size_t i = 0; i < rec.channels[c].second.size(); ++i) {
            const double a = rec.channels[c].second[i];
            const double b = back.channels[c].second[i];
            CHECK(std::abs(a - b) <= 1.2e-7 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("record duration is exposed through the waveform", "[io]") {
    const auto rec = sample_record(60000, 300000.0);
    const auto op = to_operation_record(rec);
    CHECK(op.vibration.duration_ms() == Approx(200.0));
    CHECK(op.vibration.samples.size() == 60000);
    REQUIRE(op.contacts.size() == 1);
    CHECK(op.contacts[0].pole == Pole::A);
}

TEST_CASE("channel length mismatch names both channels", "[io]") {
    RawRecord rec = sample_record(100);
    rec.channels[1].second.resize(99);
    try {
        encode_record_binary(rec);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("vib") != std::string::npos);
        CHECK(msg.find("contact_A") != std::string::npos);
    }
}

TEST_CASE("empty or invalid records are rejected before writing", "[io]") {
    RawRecord rec;
    rec.fs_hz = 1000.0;
    CHECK_THROWS_AS(encode_record_binary(rec), DataError); // no channels
    rec.channels.emplace_back("vib", std::vector<float>{});
    CHECK_THROWS_AS(encode_record_binary(rec), DataError); // empty channel
    rec.channels[0].second = {1.0f, 2.0f};
    rec.fs_hz = 0.0;
    CHECK_THROWS_AS(encode_record_binary(rec), DataError);
    rec.fs_hz = 1000.0;
    rec.channels[0].second[1] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(encode_record_binary(rec), DataError);
}

TEST_CASE("unknown version and bad magic are typed parse errors", "[io]") {
    const auto rec = sample_record(50);
    std::string bytes = encode_record_binary(rec);
    bytes[4] = 9; // version low byte
    CHECK_THROWS_AS(
        decode_record_binary(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()),
        ParseError);

    std::string garbage = "NOPE this is not a record";
    CHECK_THROWS_AS(decode_record_csv(garbage), ParseError);
}

TEST_CASE("truncated binary reports the failing offset", "[io]") {
    const auto rec = sample_record(50);
    const std::string bytes = encode_record_binary(rec);
    for (std::size_t cut : {std::size_t{3}, std::size_t{10}, std::size_t{30}, bytes.size() - 7}) {
        try {
            decode_record_binary(reinterpret_cast<const std::uint8_t*>(bytes.data()), cut);
            FAIL("expected ParseError at cut " << cut);
        } catch (const ParseError& e) {
            CHECK(e.byte_offset <= cut);
        }
    }
}

TEST_CASE("csv parser flags malformed rows", "[io]") {
    const std::string header = "# format=cbkm-record\n# fs_hz=1000\n# channels=vib\n";
    CHECK_THROWS_AS(decode_record_csv(header + "abc\n"), ParseError);
    CHECK_THROWS_AS(decode_record_csv(header + "1.0,2.0\n"), ParseError);
    CHECK_THROWS_AS(decode_record_csv(header + "inf\n"), ParseError);
    CHECK_THROWS_AS(decode_record_csv(header), ParseError); // no data
    CHECK_THROWS_AS(decode_record_csv("# fs_hz=1000\n1.0\n"), ParseError); // no channels
    const auto ok = decode_record_csv(header + "1.0\n2.0\n");
    CHECK(ok.channels[0].second.size() == 2);
}

TEST_CASE("fuzzed inputs never escape the typed error set", "[io]") {
    const auto valid_bin = encode_record_binary(sample_record(64));
    const auto valid_csv = encode_record_csv(sample_record(64));
    std::mt19937_64 eng(12345);

    auto try_parse = [](const std::string& bytes) {
        try {
            if (bytes.size() >= 4 && std::memcmp(bytes.data(), "CBKM", 4) == 0) {
                decode_record_binary(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                     bytes.size());
            } else {
                decode_record_csv(bytes);
            }
        } catch (const ParseError&) {
        } catch (const DataError&) {
        }
        // anything else propagates and fails the test
    };

    for (int iter = 0; iter < 400; ++iter) {
        std::string bytes = (iter % 2 == 0) ? valid_bin : valid_csv;
        const std::size_t mutations = 1 + eng() % 8;
        for (std::size_t m = 0; m < mutations; ++m) {
            const std::size_t pos = eng() % bytes.size();
            bytes[pos] = static_cast<char>(eng());
        }
        if (iter % 3 == 0) bytes.resize(eng() % (bytes.size() + 1));
        if (bytes.empty()) continue;
        try_parse(bytes);
    }
    // random garbage of various sizes, up to 1 MiB
    for (int iter = 0; iter < 100; ++iter) {
        std::string bytes(eng() % 2048, '\0');
        for (auto& b : bytes) b = static_cast<char>(eng());
        try_parse(bytes);
    }
    for (int iter = 0; iter < 3; ++iter) {
        std::string bytes((1 << 20) - 17 * iter, '\0');
        for (auto& b : bytes) b = static_cast<char>(eng());
        if (iter == 1) std::memcpy(bytes.data(), "CBKM", 4); // force the binary path
        try_parse(bytes);
    }
    SUCCEED("no unexpected exception or crash");
}

TEST_CASE("operation record round trips through the channel map", "[io]") {
    OperationRecord op;
    op.op_number = 7;
    op.vibration.samples = {0.5, -0.25, 0.125, 1.0};
    op.vibration.sampling_rate_hz = 1000.0;
    ContactChannel ch;
    ch.pole = Pole::B;
    ch.voltage = {1.0, 1.0, 0.0, 0.0};
    ch.sampling_rate_hz = 1000.0;
    op.contacts.push_back(ch);

    const auto raw = from_operation_record(op);
    const auto back = to_operation_record(raw);
    CHECK(back.op_number == 7);
    CHECK(back.vibration.samples == op.vibration.samples);
    REQUIRE(back.contacts.size() == 1);
    CHECK(back.contacts[0].pole == Pole::B);

    // the vibration role must resolve
    ChannelMap other;
    other.vibration = "acc_z";
    CHECK_THROWS_AS(to_operation_record(raw, other), DataError);
}

TEST_CASE("unmapped channels are ignored", "[io]") {
    RawRecord rec = sample_record(32);
    rec.channels.emplace_back("coil_current", std::vector<float>(32, 1.0f));
    const auto op = to_operation_record(rec);
    CHECK(op.contacts.size() == 1);
    CHECK(op.vibration.samples.size() == 32);
}
