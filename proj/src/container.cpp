#include "nsrlab/container.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace nsrlab {

namespace {

constexpr std::uint32_t kFlagDerivedW = 1u << 0;
constexpr std::uint32_t kFlagSolution = 1u << 1;
constexpr std::size_t kNameBytes = 16;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  template <class T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t pos) : in_(in), pos_(pos) {}
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > in_.size()) throw IntegrityError("container truncated");
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), in_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_;
};

struct Named {
  const char* name;
  const SampledField* field;
};

std::vector<Named> present_fields(const FieldStack& s) {
  std::vector<Named> f{{"u", &s.u}};
  if (s.p) f.push_back({"p", &*s.p});
  if (s.w) f.push_back({"w", &*s.w});
  if (s.f) f.push_back({"f", &*s.f});
  return f;
}

}  // namespace

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths.
  while (size > 0) {
    const uInt chunk = uInt(std::min<std::size_t>(size, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return std::uint32_t(c);
}

std::vector<std::uint8_t> encode_container(const FieldStack& s) {
  s.validate();
  const Grid& g = s.grid;
  const auto fields = present_fields(s);
  const std::uint64_t per_comp = std::uint64_t(g.cells()) * g.nt * sizeof(double);

  std::vector<std::uint8_t> payload;
  std::vector<ContainerEntry> entries;
  std::uint64_t offset = kContainerHeaderBytes + kContainerEntryBytes * fields.size();
  for (const auto& nf : fields) {
    const int comps = nf.field->components();
    ContainerEntry e{nf.name, std::uint32_t(comps), offset, per_comp * comps};
    entries.push_back(e);
    offset += e.length;
  }
  payload.reserve(offset);
  Writer pw(payload);
  for (const auto& nf : fields) {
    for (int j = 0; j < g.nt; ++j) {
      const Slice& sl = nf.field->slice(j);
      for (std::int64_t c = 0; c < g.cells(); ++c)
        for (Eigen::Index a = 0; a < sl.cols(); ++a) pw.put<double>(sl(c, a));
    }
  }

  std::vector<std::uint8_t> out;
  out.reserve(offset);
  Writer w(out);
  w.bytes("NSRL", 4);
  w.put<std::uint16_t>(kContainerVersion);
  w.put<std::uint16_t>(std::uint16_t(fields.size()));
  for (int i = 0; i < 3; ++i) w.put<std::uint32_t>(std::uint32_t(g.n));
  w.put<std::uint32_t>(std::uint32_t(g.nt));
  w.put<double>(g.length);
  w.put<double>(g.dt);
  w.put<double>(g.t0);
  w.put<std::uint32_t>(crc32_of(payload.data(), payload.size()));
  w.put<std::uint32_t>((s.w_derived ? kFlagDerivedW : 0) | (s.ns_solution ? kFlagSolution : 0));
  for (const auto& e : entries) {
    char name[kNameBytes] = {};
    std::memcpy(name, e.name.data(), std::min(e.name.size(), kNameBytes));
    w.bytes(name, kNameBytes);
    w.put<std::uint32_t>(e.components);
    w.put<std::uint32_t>(0);
    w.put<std::uint64_t>(e.offset);
    w.put<std::uint64_t>(e.length);
  }
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

ContainerInfo inspect_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kContainerHeaderBytes) throw IntegrityError("container shorter than its header");
  if (std::memcmp(bytes.data(), "NSRL", 4) != 0) throw IntegrityError("bad magic, not an NSRL container");
  Reader r(bytes, 4);
  ContainerInfo info;
  info.version = r.get<std::uint16_t>();
  if (info.version != kContainerVersion) {
    std::ostringstream os;
    os << "unsupported container version " << info.version;
    throw IntegrityError(os.str());
  }
  const std::uint16_t count = r.get<std::uint16_t>();
  const std::uint32_t nx = r.get<std::uint32_t>(), ny = r.get<std::uint32_t>(),
                      nz = r.get<std::uint32_t>(), nt = r.get<std::uint32_t>();
  const double length = r.get<double>(), dt = r.get<double>(), t0 = r.get<double>();
  info.crc = r.get<std::uint32_t>();
  info.flags = r.get<std::uint32_t>();
  try {
    info.grid = make_grid(int(nx), int(ny), int(nz), int(nt), length, dt, t0);
  } catch (const ValidationError& e) {
    throw IntegrityError(std::string("container header holds an invalid grid: ") + e.what());
  }

  const std::size_t dir_end = kContainerHeaderBytes + kContainerEntryBytes * count;
  if (bytes.size() < dir_end) throw IntegrityError("container directory truncated");
  const std::uint64_t per_comp = std::uint64_t(info.grid.cells()) * info.grid.nt * sizeof(double);
  std::uint64_t expect = dir_end;
  for (int i = 0; i < count; ++i) {
    const std::size_t at = kContainerHeaderBytes + kContainerEntryBytes * i;
    const char* name = reinterpret_cast<const char*>(bytes.data() + at);
    ContainerEntry e;
    e.name.assign(name, strnlen(name, kNameBytes));
    Reader er(bytes, at + kNameBytes);
    e.components = er.get<std::uint32_t>();
    er.get<std::uint32_t>();
    e.offset = er.get<std::uint64_t>();
    e.length = er.get<std::uint64_t>();
    // Fields are packed in directory order, so overlap and gaps both show up here.
    if (e.offset != expect) throw IntegrityError("field '" + e.name + "' has a misplaced offset");
    if (e.components == 0 || e.length != per_comp * e.components)
      throw IntegrityError("field '" + e.name + "' length does not match the grid");
    if (e.offset + e.length > bytes.size()) throw IntegrityError("field '" + e.name + "' runs past the end");
    expect = e.offset + e.length;
    info.entries.push_back(e);
  }
  if (expect != bytes.size()) throw IntegrityError("trailing bytes after the last field");
  const std::uint32_t crc = crc32_of(bytes.data() + dir_end, bytes.size() - dir_end);
  if (crc != info.crc) {
    std::ostringstream os;
    os << std::hex << "checksum mismatch: header 0x" << info.crc << ", payload 0x" << crc;
    throw IntegrityError(os.str());
  }
  return info;
}

FieldStack decode_container(const std::vector<std::uint8_t>& bytes, ContainerInfo* out_info) {
  const ContainerInfo info = inspect_container(bytes);
  const Grid& g = info.grid;
  FieldStack s;
  s.grid = g;
  s.w_derived = info.flags & kFlagDerivedW;
  s.ns_solution = info.flags & kFlagSolution;
  bool have_u = false;
  for (const auto& e : info.entries) {
    SampledField f(g, int(e.components));
    Reader r(bytes, e.offset);
    for (int j = 0; j < g.nt; ++j) {
      Slice& sl = f.slice(j);
      for (std::int64_t c = 0; c < g.cells(); ++c)
        for (Eigen::Index a = 0; a < sl.cols(); ++a) sl(c, a) = r.get<double>();
    }
    auto expect_comps = [&](std::uint32_t n) {
      if (e.components != n) throw IntegrityError("field '" + e.name + "' has the wrong component count");
    };
    if (e.name == "u") {
      expect_comps(3);
      s.u = std::move(f);
      have_u = true;
    } else if (e.name == "p") {
      expect_comps(1);
      s.p = std::move(f);
    } else if (e.name == "w") {
      expect_comps(3);
      s.w = std::move(f);
    } else if (e.name == "f") {
      expect_comps(3);
      s.f = std::move(f);
    } else {
      throw IntegrityError("unknown field '" + e.name + "'");
    }
  }
  if (!have_u) throw IntegrityError("container has no velocity field");
  if (s.w_derived && !s.w) s.w_derived = false;
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw IntegrityError(e.what());
  } catch (const NumericError& e) {
    throw IntegrityError(e.what());
  }
  if (out_info) *out_info = info;
  return s;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed on '" + path + "'");
}

void write_container(const std::string& path, const FieldStack& stack) {
  write_file(path, encode_container(stack));
}

FieldStack read_container(const std::string& path, ContainerInfo* info) {
  return decode_container(read_file(path), info);
}

}  // namespace nsrlab
