#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace icsdetect::modbus {

inline constexpr std::size_t kHeaderSize = 7;     // MBAP: txn(2) proto(2) length(2) unit(1)
inline constexpr std::size_t kMinFrameSize = 8;   // header + function code
inline constexpr std::size_t kMaxDataSize = 252;

/// Function codes the toolkit generates or names.
enum FunctionCode : std::uint8_t {
    kReadHoldingRegisters = 3,
    kWriteSingleCoil = 5,
    kWriteMultipleRegisters = 16,
    kWriteFileRecord = 21,
    kReadDeviceIdentification = 43,
};

/// Modbus/TCP application data unit. Only the MBAP envelope and function
/// code are modeled; the PDU payload stays opaque.
struct Frame {
    std::uint16_t transaction_id = 0;
    std::uint16_t protocol_id = 0;
    std::uint8_t unit_id = 0;
    std::uint8_t function_code = 1;
    std::vector<std::uint8_t> data;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// Parses one ADU. Throws InputError on short input, a non-zero protocol
/// id, a length field that disagrees with the byte count, function code 0
/// or an oversized payload. Exception responses (fc >= 0x80) are accepted.
Frame decode(std::span<const std::uint8_t> bytes);

/// Serializes a frame; throws InputError if the payload exceeds 252 bytes.
std::vector<std::uint8_t> encode(const Frame& frame);

/// Human-readable function name, "Unknown(fc)" for codes not in the table.
std::string describe(const Frame& frame);
std::string describe(std::uint8_t function_code);

} // namespace icsdetect::modbus
