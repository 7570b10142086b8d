#include "icsdetect/modbus.hpp"

#include "icsdetect/error.hpp"

namespace icsdetect::modbus {

namespace {

std::uint16_t read_be16(std::span<const std::uint8_t> bytes, std::size_t offset) {
    return static_cast<std::uint16_t>(bytes[offset] << 8 | bytes[offset + 1]);
}

void write_be16(std::vector<std::uint8_t>& out, std::uint16_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value & 0xff));
}

} // namespace

Frame decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMinFrameSize) {
        throw InputError("modbus frame too short (" + std::to_string(bytes.size()) + " bytes)");
    }
    Frame frame;
    frame.transaction_id = read_be16(bytes, 0);
    frame.protocol_id = read_be16(bytes, 2);
    if (frame.protocol_id != 0) {
        throw InputError("unsupported protocol id " + std::to_string(frame.protocol_id));
    }
    const std::size_t length = read_be16(bytes, 4);
    // The length field counts the unit id and everything after it.
    if (length != bytes.size() - 6) {
        throw InputError("declared length " + std::to_string(length) + " does not match " +
                         std::to_string(bytes.size() - 6) + " remaining bytes");
    }
    frame.unit_id = bytes[6];
    frame.function_code = bytes[7];
    if (frame.function_code == 0) {
        throw InputError("function code 0 is invalid");
    }
    if (bytes.size() - kMinFrameSize > kMaxDataSize) {
        throw InputError("modbus payload exceeds 252 bytes");
    }
    frame.data.assign(bytes.begin() + kMinFrameSize, bytes.end());
    return frame;
}

std::vector<std::uint8_t> encode(const Frame& frame) {
    if (frame.data.size() > kMaxDataSize) {
        throw InputError("modbus payload of " + std::to_string(frame.data.size()) + " bytes exceeds 252");
    }
    if (frame.protocol_id != 0) {
        throw InputError("unsupported protocol id " + std::to_string(frame.protocol_id));
    }
    if (frame.function_code == 0) {
        throw InputError("function code 0 is invalid");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kMinFrameSize + frame.data.size());
    write_be16(out, frame.transaction_id);
    write_be16(out, frame.protocol_id);
    write_be16(out, static_cast<std::uint16_t>(frame.data.size() + 2));
    out.push_back(frame.unit_id);
    out.push_back(frame.function_code);
    out.insert(out.end(), frame.data.begin(), frame.data.end());
    return out;
}

std::string describe(std::uint8_t function_code) {
    switch (function_code) {
    case kReadHoldingRegisters: return "ReadHoldingRegisters";
    case kWriteSingleCoil: return "WriteSingleCoil";
    case kWriteMultipleRegisters: return "WriteMultipleRegisters";
    case kWriteFileRecord: return "WriteFileRecord";
    case kReadDeviceIdentification: return "ReadDeviceIdentification";
    default: return "Unknown(" + std::to_string(function_code) + ")";
    }
}

std::string describe(const Frame& frame) { return describe(frame.function_code); }

} // namespace icsdetect::modbus
