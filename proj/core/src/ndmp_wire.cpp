#include <bit>
#include <cstring>

#include "fedlay/ndmp.hpp"

namespace fedlay::ndmp {

namespace {

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = sizeof(T); i-- > 0;) bytes.push_back(raw[i]);
    } else {
      bytes.insert(bytes.end(), raw, raw + sizeof(T));
    }
  }

  void put_peer(const PeerInfo& p) {
    put<std::uint64_t>(p.id);
    for (Coord c : p.coords) put<double>(c.value());
  }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, std::size_t pos) : b_(b), pos_(pos) {}

  template <typename T>
  T get() {
    if (b_.size() - pos_ < sizeof(T)) throw ProtocolError("truncated message");
    unsigned char raw[sizeof(T)];
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T); ++i) raw[sizeof(T) - 1 - i] = b_[pos_ + i];
    } else {
      std::memcpy(raw, b_.data() + pos_, sizeof(T));
    }
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }

  Coord get_coord() {
    const double v = get<double>();
    if (!(v >= 0.0 && v < 1.0)) throw ProtocolError("coordinate outside [0, 1)");
    return Coord(v);
  }

  PeerInfo get_peer(std::size_t spaces) {
    PeerInfo p;
    p.id = get<std::uint64_t>();
    p.coords.reserve(spaces);
    for (std::size_t i = 0; i < spaces; ++i) p.coords.push_back(get_coord());
    return p;
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_;
};

}  // namespace

std::size_t wire_size(std::size_t spaces, bool has_peer) {
  const std::size_t peer = 8 + 8 * spaces;
  return 4 + 1 + 2 + 8 + peer + 1 + 2 + 1 + (has_peer ? peer : 0);
}

std::vector<std::uint8_t> encode(const ProtocolMessage& msg) {
  if (msg.peer && msg.peer->coords.size() != msg.origin.coords.size()) {
    throw ProtocolError("peer and origin coordinate vectors differ in length");
  }
  Writer w;
  w.put<std::uint32_t>(0);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(msg.kind));
  w.put<std::uint16_t>(msg.space);
  w.put<double>(msg.target.value());
  w.put_peer(msg.origin);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(msg.direction));
  w.put<std::uint16_t>(msg.hop_count);
  w.put<std::uint8_t>(msg.peer ? 1 : 0);
  if (msg.peer) w.put_peer(*msg.peer);

  const auto len = static_cast<std::uint32_t>(w.bytes.size() - 4);
  Writer prefix;
  prefix.put<std::uint32_t>(len);
  std::copy(prefix.bytes.begin(), prefix.bytes.end(), w.bytes.begin());
  return std::move(w.bytes);
}

ProtocolMessage decode(const std::vector<std::uint8_t>& bytes,
                       std::size_t spaces) {
  Reader r(bytes, 0);
  const auto len = r.get<std::uint32_t>();
  if (bytes.size() - 4 != len) {
    throw ProtocolError("length prefix " + std::to_string(len) +
                        " does not match payload of " +
                        std::to_string(bytes.size() - 4) + " bytes");
  }
  ProtocolMessage m;
  const auto kind = r.get<std::uint8_t>();
  if (kind >= kMessageKinds) {
    throw ProtocolError("unknown message kind " + std::to_string(kind));
  }
  m.kind = static_cast<MessageKind>(kind);
  m.space = r.get<std::uint16_t>();
  if (m.space >= spaces) throw ProtocolError("space index out of range");
  m.target = r.get_coord();
  m.origin = r.get_peer(spaces);
  const auto dir = r.get<std::uint8_t>();
  if (dir > 2) throw ProtocolError("bad direction " + std::to_string(dir));
  m.direction = static_cast<Direction>(dir);
  m.hop_count = r.get<std::uint16_t>();
  const auto has_peer = r.get<std::uint8_t>();
  if (has_peer > 1) throw ProtocolError("bad peer flag");
  if (has_peer) m.peer = r.get_peer(spaces);
  if (r.pos() != bytes.size()) throw ProtocolError("trailing bytes after message");
  return m;
}

}  // namespace fedlay::ndmp
