#include <doctest.h>

#include "icsdetect/error.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/rng.hpp"

using namespace icsdetect;
using Bytes = std::vector<std::uint8_t>;

namespace {

/// Independent byte layout: big-endian header fields written by hand.
Bytes hand_encode(std::uint16_t txn, std::uint8_t unit, std::uint8_t fc, const Bytes& data) {
    const auto len = static_cast<std::uint16_t>(data.size() + 2);
    Bytes b{static_cast<std::uint8_t>(txn / 256), static_cast<std::uint8_t>(txn % 256), 0, 0,
            static_cast<std::uint8_t>(len / 256), static_cast<std::uint8_t>(len % 256), unit, fc};
    b.insert(b.end(), data.begin(), data.end());
    return b;
}

} // namespace

TEST_CASE("decode the reference request") {
    const Bytes b{0x00, 0x01, 0x00, 0x00, 0x00, 0x06, 0x11, 0x03, 0x00, 0x6B, 0x00, 0x03};
    const auto f = modbus::decode(b);
    CHECK(f.transaction_id == 1);
    CHECK(f.protocol_id == 0);
    CHECK(f.unit_id == 0x11);
    CHECK(f.function_code == 3);
    CHECK(f.data == Bytes{0x00, 0x6B, 0x00, 0x03});
    CHECK(modbus::encode(f) == b);
}

TEST_CASE("non-zero protocol id is rejected") {
    const Bytes b{0x00, 0x01, 0x00, 0x01, 0x00, 0x06, 0x11, 0x03, 0x00, 0x6B, 0x00, 0x03};
    CHECK_THROWS_WITH_AS(modbus::decode(b), doctest::Contains("unsupported protocol id"), InputError);
}

TEST_CASE("encode the minimal frame") {
    modbus::Frame f;
    f.function_code = 1;
    CHECK(modbus::encode(f) == Bytes{0x00, 0x00, 0x00, 0x00, 0x00, 0x02, 0x00, 0x01});
}

TEST_CASE("payload bounds") {
    modbus::Frame f;
    f.function_code = 21;
    f.data.assign(252, 0xAA);
    const auto b = modbus::encode(f);
    CHECK(b.size() == 260);
    CHECK(modbus::decode(b) == f);
    f.data.push_back(0);
    CHECK_THROWS_AS(modbus::encode(f), InputError);
}

TEST_CASE("length field mismatch and function code 0") {
    auto b = hand_encode(7, 1, 3, {1, 2, 3});
    b.push_back(9);
    CHECK_THROWS_AS(modbus::decode(b), InputError);
    b.pop_back();
    b.pop_back();
    CHECK_THROWS_AS(modbus::decode(b), InputError);
    CHECK_THROWS_AS(modbus::decode(hand_encode(7, 1, 0, {})), InputError);
}

TEST_CASE("exception responses decode") {
    const auto f = modbus::decode(hand_encode(3, 1, 0x83, {0x02}));
    CHECK(f.function_code == 0x83);
}

TEST_CASE("every input shorter than 8 bytes is rejected") {
    Rng rng(RngSeed{2});
    for (std::size_t len = 0; len < 8; ++len) {
        for (int trial = 0; trial < 200; ++trial) {
            Bytes b(len);
            for (auto& x : b) {
                x = static_cast<std::uint8_t>(rng.below(256));
            }
            CHECK_THROWS_AS(modbus::decode(b), InputError);
        }
    }
}

TEST_CASE("10000 fuzzed frames match the hand layout and round-trip") {
    Rng rng(RngSeed{77});
    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
        modbus::Frame f;
        f.transaction_id = static_cast<std::uint16_t>(rng.below(65536));
        f.unit_id = static_cast<std::uint8_t>(rng.below(256));
        f.function_code = static_cast<std::uint8_t>(1 + rng.below(255));
        f.data.resize(rng.below(253));
        for (auto& x : f.data) {
            x = static_cast<std::uint8_t>(rng.below(256));
        }
        const auto bytes = modbus::encode(f);
        if (bytes != hand_encode(f.transaction_id, f.unit_id, f.function_code, f.data) ||
            !(modbus::decode(bytes) == f) || modbus::encode(modbus::decode(bytes)) != bytes) {
            ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("function names") {
    CHECK(modbus::describe(3) == "ReadHoldingRegisters");
    CHECK(modbus::describe(5) == "WriteSingleCoil");
    CHECK(modbus::describe(16) == "WriteMultipleRegisters");
    CHECK(modbus::describe(21) == "WriteFileRecord");
    CHECK(modbus::describe(43) == "ReadDeviceIdentification");
    CHECK(modbus::describe(99) == "Unknown(99)");
    modbus::Frame f;
    f.function_code = 5;
    CHECK(modbus::describe(f) == "WriteSingleCoil");
}
