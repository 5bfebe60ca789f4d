#pragma once

// Bitcoin P2P framing for the inv/getdata/tx subset, and the line-oriented
// trace format shared by the simulator and sanitized captures.

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ntssl/common.hpp"

namespace ntssl::wiremsg {

using Magic = std::array<std::uint8_t, 4>;

inline constexpr Magic kMainnetMagic{0xF9, 0xBE, 0xB4, 0xD9};
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::size_t kCommandSize = 12;
inline constexpr std::size_t kInventoryItemSize = 36;
inline constexpr std::uint32_t kInvTx = 1;

class DecodeError : public DataError {
 public:
  enum class Kind { truncated, non_canonical, bad_checksum, bad_length, bad_command, count_mismatch };

  DecodeError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline std::array<std::uint8_t, 32> double_sha256(std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, 32> first{};
  std::array<std::uint8_t, 32> second{};
  SHA256(data.data(), data.size(), first.data());
  SHA256(first.data(), first.size(), second.data());
  return second;
}

inline std::array<std::uint8_t, 4> checksum(std::span<const std::uint8_t> payload) {
  const auto digest = double_sha256(payload);
  return {digest[0], digest[1], digest[2], digest[3]};
}

struct VarInt {
  std::uint64_t value = 0;
  std::size_t consumed = 0;
};

// Compact-size decoding; rejects non-canonical (overlong) forms.
inline VarInt decode_varint(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DecodeError(DecodeError::Kind::truncated, "varint: no input");
  const std::uint8_t tag = bytes[0];
  std::size_t width = 0;
  std::uint64_t floor = 0;
  switch (tag) {
    case 0xFD: width = 2; floor = 0xFD; break;
    case 0xFE: width = 4; floor = 0x10000; break;
    case 0xFF: width = 8; floor = 0x100000000ULL; break;
    default: return {tag, 1};
  }
  if (bytes.size() < 1 + width) {
    throw DecodeError(DecodeError::Kind::truncated, "varint: truncated");
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < width; ++i) value |= std::uint64_t{bytes[1 + i]} << (8 * i);
  if (value < floor) throw DecodeError(DecodeError::Kind::non_canonical, "varint: non-canonical encoding");
  return {value, 1 + width};
}

inline void encode_varint(std::uint64_t value, Bytes& out) {
  auto put = [&](std::uint64_t v, std::size_t width) {
    for (std::size_t i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  if (value < 0xFD) {
    out.push_back(static_cast<std::uint8_t>(value));
  } else if (value <= 0xFFFF) {
    out.push_back(0xFD);
    put(value, 2);
  } else if (value <= 0xFFFFFFFFULL) {
    out.push_back(0xFE);
    put(value, 4);
  } else {
    out.push_back(0xFF);
    put(value, 8);
  }
}

enum class Command { inv, getdata, tx, other };

struct Frame {
  Magic magic = kMainnetMagic;
  std::string command;
  std::uint32_t payload_len = 0;
  std::array<std::uint8_t, 4> checksum{};
  Bytes payload;

  Command kind() const {
    if (command == "inv") return Command::inv;
    if (command == "getdata") return Command::getdata;
    if (command == "tx") return Command::tx;
    return Command::other;
  }

  bool operator==(const Frame&) const = default;
};

inline Bytes encode_frame(std::string_view command, std::span<const std::uint8_t> payload,
                          const Magic& magic = kMainnetMagic) {
  if (command.size() > kCommandSize) {
    throw UsageError("command longer than 12 characters: " + std::string(command));
  }
  for (char c : command) {
    if (c < 0x20 || c > 0x7E) throw UsageError("command contains non-printable character");
  }
  Bytes out;
  out.reserve(kHeaderSize + payload.size());
  out.insert(out.end(), magic.begin(), magic.end());
  out.insert(out.end(), command.begin(), command.end());
  out.resize(4 + kCommandSize, 0);
  const auto len = static_cast<std::uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
  const auto sum = checksum(payload);
  out.insert(out.end(), sum.begin(), sum.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

inline Bytes encode_frame(const Frame& frame) { return encode_frame(frame.command, frame.payload, frame.magic); }

inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
  using K = DecodeError::Kind;
  if (bytes.size() < kHeaderSize) throw DecodeError(K::truncated, "frame: header truncated");
  Frame f;
  std::copy_n(bytes.begin(), 4, f.magic.begin());

  const auto cmd = bytes.subspan(4, kCommandSize);
  std::size_t name_len = 0;
  while (name_len < kCommandSize && cmd[name_len] != 0) {
    if (cmd[name_len] < 0x20 || cmd[name_len] > 0x7E) {
      throw DecodeError(K::bad_command, "frame: non-printable command byte");
    }
    ++name_len;
  }
  if (std::any_of(cmd.begin() + static_cast<std::ptrdiff_t>(name_len), cmd.end(),
                  [](std::uint8_t b) { return b != 0; })) {
    throw DecodeError(K::bad_command, "frame: command padding not zero");
  }
  f.command.assign(cmd.begin(), cmd.begin() + static_cast<std::ptrdiff_t>(name_len));

  for (int i = 0; i < 4; ++i) f.payload_len |= std::uint32_t{bytes[16 + i]} << (8 * i);
  std::copy_n(bytes.begin() + 20, 4, f.checksum.begin());

  const std::size_t available = bytes.size() - kHeaderSize;
  if (available < f.payload_len) throw DecodeError(K::truncated, "frame: payload truncated");
  if (available > f.payload_len) throw DecodeError(K::bad_length, "frame: trailing bytes beyond declared length");
  f.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
  if (checksum(f.payload) != f.checksum) throw DecodeError(K::bad_checksum, "frame: checksum mismatch");
  return f;
}

struct InventoryItem {
  std::uint32_t kind = kInvTx;
  Hash32 hash;

  bool is_transaction() const { return kind == kInvTx; }
  bool operator==(const InventoryItem&) const = default;
};

// inv and getdata share this payload: varint count, then count 36-byte items.
inline std::vector<InventoryItem> parse_inventory(std::span<const std::uint8_t> payload) {
  const auto count = decode_varint(payload);
  const auto body = payload.subspan(count.consumed);
  if (count.value > body.size() / kInventoryItemSize || body.size() != count.value * kInventoryItemSize) {
    throw DecodeError(DecodeError::Kind::count_mismatch, "inventory: count does not match payload length");
  }
  std::vector<InventoryItem> items(count.value);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto item = body.subspan(i * kInventoryItemSize, kInventoryItemSize);
    items[i].kind = std::uint32_t{item[0]} | std::uint32_t{item[1]} << 8 | std::uint32_t{item[2]} << 16 |
                    std::uint32_t{item[3]} << 24;
    std::copy_n(item.begin() + 4, 32, items[i].hash.bytes.begin());
  }
  return items;
}

inline Bytes encode_inventory(std::span<const InventoryItem> items) {
  Bytes out;
  encode_varint(items.size(), out);
  for (const auto& item : items) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(item.kind >> (8 * i)));
    out.insert(out.end(), item.hash.bytes.begin(), item.hash.bytes.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trace records

enum class Direction { sent_by_target, received_by_target };
enum class MsgKind { inv, getdata, tx };

struct TraceRecord {
  double ts = 0;
  std::uint32_t conn_id = 0;
  std::uint32_t peer_id = 0;
  Direction direction = Direction::sent_by_target;
  MsgKind msg = MsgKind::inv;
  Hash32 tx_hash;

  bool operator==(const TraceRecord&) const = default;
};

inline std::string_view to_string(MsgKind m) {
  switch (m) {
    case MsgKind::inv: return "inv";
    case MsgKind::getdata: return "getdata";
    case MsgKind::tx: return "tx";
  }
  return "?";
}

inline std::string format_record(const TraceRecord& r) {
  std::string line;
  line.reserve(128);
  line += "ts=";
  line += format_double(r.ts);
  line += " conn=";
  line += std::to_string(r.conn_id);
  line += " peer=";
  line += std::to_string(r.peer_id);
  line += r.direction == Direction::sent_by_target ? " dir=S msg=" : " dir=R msg=";
  line += to_string(r.msg);
  line += " tx=";
  line += r.tx_hash.hex();
  return line;
}

inline TraceRecord parse_record(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& why) -> DataError {
    return DataError("trace line " + std::to_string(line_no) + ": " + why);
  };
  const auto fields = parse_fields(line);
  if (!fields || fields->size() != 6) throw fail("expected 6 key=value fields");
  static constexpr std::string_view keys[] = {"ts", "conn", "peer", "dir", "msg", "tx"};
  TraceRecord r;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto [key, value] = (*fields)[i];
    if (key != keys[i]) throw fail("expected field '" + std::string(keys[i]) + "'");
    switch (i) {
      case 0: {
        const auto ts = parse_double(value);
        if (!ts || !(*ts >= 0) || *ts == std::numeric_limits<double>::infinity()) throw fail("bad ts");
        r.ts = *ts;
        break;
      }
      case 1:
      case 2: {
        const auto id = parse_u64(value);
        if (!id || *id > UINT32_MAX) throw fail("bad " + std::string(key));
        (i == 1 ? r.conn_id : r.peer_id) = static_cast<std::uint32_t>(*id);
        break;
      }
      case 3:
        if (value == "S") r.direction = Direction::sent_by_target;
        else if (value == "R") r.direction = Direction::received_by_target;
        else throw fail("dir must be S or R");
        break;
      case 4:
        if (value == "inv") r.msg = MsgKind::inv;
        else if (value == "getdata") r.msg = MsgKind::getdata;
        else if (value == "tx") r.msg = MsgKind::tx;
        else throw fail("msg must be inv, getdata or tx");
        break;
      case 5: {
        const auto h = Hash32::from_hex(value);
        if (!h) throw fail("tx must be 64 hex characters");
        r.tx_hash = *h;
        break;
      }
    }
  }
  return r;
}

inline std::vector<TraceRecord> read_trace(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto r = parse_record(line, line_no);
    if (!records.empty() && r.ts < records.back().ts) {
      throw DataError("trace line " + std::to_string(line_no) + ": timestamp goes backwards");
    }
    records.push_back(r);
  }
  return records;
}

inline std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path);
  return read_trace(in);
}

inline void write_trace(std::span<const TraceRecord> records, std::ostream& out) {
  for (const auto& r : records) out << format_record(r) << '\n';
}

inline void write_trace(std::span<const TraceRecord> records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trace file: " + path);
  write_trace(records, out);
}

}  // namespace ntssl::wiremsg
