#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lvdd/bytes.hpp"
#include "lvdd/crc32.hpp"
#include "lvdd/dpp.hpp"
#include "lvdd/error.hpp"
#include "lvdd/half.hpp"
#include "lvdd/hosvd.hpp"
#include "lvdd/storage_layout.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

// ---------------------------------------------------------------------------
// Latent dataset (.lvdd)
//
//   magic "LVDD" | u32 version=1 | u32 class_count | u32 item_count
//   u8 order | u32 extent[order]
//   item_count x { u32 id_len | id bytes | u32 class_id | f32 payload[numel] }
//
// Files end exactly after the last record; class_names is an in-memory
// convenience and is not persisted.
// ---------------------------------------------------------------------------

struct LatentItem {
  std::string id;
  std::uint32_t class_id = 0;
  Tensor tensor;
};

struct LatentDataset {
  std::vector<LatentItem> items;
  std::vector<std::size_t> latent_shape;
  std::uint32_t num_classes = 0;
  std::map<std::uint32_t, std::string> class_names;

  void validate() const {
    std::vector<char> seen(num_classes, 0);
    for (const auto& it : items) {
      if (it.tensor.shape() != latent_shape)
        throw ShapeError("dataset item '" + it.id + "' does not match the shared latent shape");
      if (it.class_id >= num_classes)
        throw ValueError("dataset item '" + it.id + "' has class id outside [0, num_classes)");
      seen[it.class_id] = 1;
    }
    for (std::uint32_t c = 0; c < num_classes; ++c)
      if (!seen[c]) throw ValueError("class " + std::to_string(c) + " has no items");
  }
};

inline std::uint64_t latent_dataset_file_bytes(const LatentDataset& d) {
  std::uint64_t n = 4 + 4 + 4 + 4 + 1 + 4ull * d.latent_shape.size();
  const std::uint64_t numel = shape_product(d.latent_shape);
  for (const auto& it : d.items) n += 4 + it.id.size() + 4 + 4ull * numel;
  return n;
}

inline std::vector<std::uint8_t> encode_latent_dataset(const LatentDataset& d) {
  d.validate();
  ByteWriter w;
  w.put_bytes(reinterpret_cast<const std::uint8_t*>("LVDD"), 4);
  w.put_u32(1);
  w.put_u32(d.num_classes);
  w.put_u32(static_cast<std::uint32_t>(d.items.size()));
  w.put_u8(static_cast<std::uint8_t>(d.latent_shape.size()));
  for (std::size_t e : d.latent_shape) w.put_u32(static_cast<std::uint32_t>(e));
  for (const auto& it : d.items) {
    w.put_string(it.id);
    w.put_u32(it.class_id);
    for (double v : it.tensor.data()) w.put_f32(static_cast<float>(v));
  }
  return w.take();
}

inline LatentDataset decode_latent_dataset(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(r.cursor(), "LVDD", 4) != 0)
    throw FormatError(FormatFault::bad_magic, "not a latent dataset file (bad magic)");
  r.skip(4);
  const std::uint32_t version = r.get_u32();
  if (version != 1)
    throw FormatError(FormatFault::version_mismatch,
                      "unsupported latent dataset version " + std::to_string(version));
  LatentDataset d;
  d.num_classes = r.get_u32();
  const std::uint32_t item_count = r.get_u32();
  const std::uint8_t order = r.get_u8();
  if (order == 0) throw FormatError(FormatFault::corrupt_field, "tensor order must be >= 1");
  d.latent_shape.resize(order);
  for (std::uint8_t i = 0; i < order; ++i) {
    d.latent_shape[i] = r.get_u32();
    if (d.latent_shape[i] == 0)
      throw FormatError(FormatFault::corrupt_field, "zero tensor extent");
  }
  const std::size_t numel = shape_product(d.latent_shape);
  d.items.reserve(item_count);
  for (std::uint32_t i = 0; i < item_count; ++i) {
    LatentItem it;
    it.id = r.get_string();
    it.class_id = r.get_u32();
    if (it.class_id >= d.num_classes)
      throw FormatError(FormatFault::corrupt_field, "item class id out of range");
    std::vector<double> data(numel);
    for (std::size_t k = 0; k < numel; ++k) data[k] = static_cast<double>(r.get_f32());
    it.tensor = Tensor(d.latent_shape, std::move(data));
    d.items.push_back(std::move(it));
  }
  if (r.remaining() != 0)
    throw FormatError(FormatFault::length_mismatch, "trailing bytes after last record");
  return d;
}

inline void write_latent_dataset(const LatentDataset& d, const std::string& path) {
  write_file_bytes(path, encode_latent_dataset(d));
}

inline LatentDataset read_latent_dataset(const std::string& path) {
  return decode_latent_dataset(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Distilled archive (.dar)
//
//   magic "LVDA" | u32 version=1 | u32 header_crc | u32 header_len
//   header body (header_len bytes, covered by header_crc):
//     f64 ratio | u8 sigma_kind | f64 sigma_value | u64 master_seed
//     u8 method | u8 precision
//     u8 latent_order | u32 latent_extent[...]
//     u64 budget_bytes | u64 model_bytes | u64 total_bytes | u8 within_budget
//     u32 num_classes
//     per class: u32 class_id | u8 kind | u32 m | u64 section_bytes
//                f64 selection_log_prob | m x { u32 id_len | id bytes }
//   sections in manifest order, each:
//     u8 kind | u8 precision | u8 order | u8 flags=0
//     order x { u32 d_i | u32 r_i }
//     payload (element_size per element) | u32 crc32 of the section so far
//
// Checksums are verified over the declared byte ranges before any parsing,
// so a single corrupted byte anywhere in the header body or a section is
// reported as an integrity error. total_bytes equals the exact file size.
// ---------------------------------------------------------------------------

enum class SigmaPolicyKind : std::uint8_t { median = 0, fixed = 1 };

struct ArchiveConfig {
  double ratio = 0.75;
  SigmaPolicyKind sigma_kind = SigmaPolicyKind::median;
  double sigma_value = 0.0;  // meaningful only for fixed
  std::uint64_t master_seed = 0;
  SelectionMethod method = SelectionMethod::exact_kdpp;
  Precision precision = Precision::fp32;
};

struct ClassSection {
  std::uint32_t class_id = 0;
  SectionKind kind = SectionKind::raw;
  HosvdFactorization hosvd;          // kind == hosvd
  Tensor raw;                        // kind == raw: stacked (m x latent) tensor
  SvdFactorization svd;              // kind == svd
  std::vector<std::string> item_ids; // selected instances, in stacking order
  double selection_log_prob = 0.0;
  std::uint64_t byte_length = 0;     // filled by write/read
  std::uint64_t offset = 0;          // absolute file offset, filled by write/read
};

struct DistilledArchive {
  ArchiveConfig config;
  std::vector<std::size_t> latent_shape;
  std::vector<ClassSection> sections;  // ascending class_id
  std::uint64_t budget_bytes = 0;
  std::uint64_t model_bytes = 0;
  std::uint64_t total_bytes = 0;  // exact file size, filled by write/read
  bool within_budget = false;
  std::vector<std::string> warnings;  // in-memory only
};

// Fixed archive bytes independent of the manifest: magic/version/crc/length,
// config snapshot, latent shape, accounting block, class count.
inline std::uint64_t distilled_fixed_bytes(std::size_t latent_order) {
  return 16 + 27 + (1 + 4ull * latent_order) + 25 + 4;
}

// Per-class manifest entry: class_id, kind, m, section length, log prob,
// then the id strings.
inline std::uint64_t manifest_entry_bytes(const std::vector<std::string>& ids) {
  std::uint64_t n = 4 + 1 + 4 + 8 + 8;
  for (const auto& id : ids) n += 4 + id.size();
  return n;
}

namespace detail {

inline std::size_t section_instance_count(const ClassSection& s) {
  switch (s.kind) {
    case SectionKind::raw: return s.raw.extent(0);
    case SectionKind::hosvd: return s.hosvd.original_shape.at(0);
    case SectionKind::svd: return s.svd.original_shape.at(0);
  }
  throw ValueError("unknown section kind");
}

inline std::uint64_t section_bytes(const ClassSection& s, Precision p) {
  switch (s.kind) {
    case SectionKind::raw: return raw_storage_bytes(s.raw.shape(), p);
    case SectionKind::hosvd: return storage_bytes(s.hosvd, p);
    case SectionKind::svd: return storage_bytes(s.svd, p);
  }
  throw ValueError("unknown section kind");
}

inline void put_elements(ByteWriter& w, const std::vector<double>& v, Precision p) {
  if (p == Precision::fp32)
    for (double x : v) w.put_f32(static_cast<float>(x));
  else
    for (double x : v) w.put_u16(double_to_half_bits(x));
}

inline std::vector<double> get_elements(ByteReader& r, std::size_t n, Precision p) {
  std::vector<double> out(n);
  if (p == Precision::fp32)
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(r.get_f32());
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = half_bits_to_double(r.get_u16());
  return out;
}

inline void encode_section(ByteWriter& w, const ClassSection& s, Precision p) {
  const std::size_t start = w.size();
  w.put_u8(static_cast<std::uint8_t>(s.kind));
  w.put_u8(static_cast<std::uint8_t>(p));
  std::vector<std::size_t> extents, ranks;
  switch (s.kind) {
    case SectionKind::raw:
      extents = s.raw.shape();
      ranks = extents;
      break;
    case SectionKind::hosvd:
      extents = s.hosvd.original_shape;
      for (std::size_t i = 0; i < extents.size(); ++i) ranks.push_back(s.hosvd.core.extent(i));
      break;
    case SectionKind::svd:
      extents = s.svd.original_shape;
      ranks = extents;
      ranks[0] = s.svd.u.cols();  // rank lives in the mode-0 slot
      break;
  }
  w.put_u8(static_cast<std::uint8_t>(extents.size()));
  w.put_u8(0);  // flags
  for (std::size_t i = 0; i < extents.size(); ++i) {
    w.put_u32(static_cast<std::uint32_t>(extents[i]));
    w.put_u32(static_cast<std::uint32_t>(ranks[i]));
  }
  switch (s.kind) {
    case SectionKind::raw:
      put_elements(w, s.raw.data(), p);
      break;
    case SectionKind::hosvd:
      put_elements(w, s.hosvd.core.data(), p);
      for (const Matrix& u : s.hosvd.factors) put_elements(w, u.data(), p);
      break;
    case SectionKind::svd:
      put_elements(w, s.svd.u.data(), p);
      put_elements(w, s.svd.singular_values, p);
      put_elements(w, s.svd.v.data(), p);
      break;
  }
  w.put_u32(crc32(w.bytes().data() + start, w.size() - start));
}

inline void decode_section(ByteReader& r, ClassSection& s, std::uint64_t declared_bytes,
                           double ratio) {
  const std::size_t start = r.pos();
  // Checksum first, over the manifest-declared range: any corrupt byte in
  // the section surfaces as an integrity error, not a parse failure.
  if (declared_bytes < section_overhead_bytes(1))
    throw FormatError(FormatFault::corrupt_field, "declared section length is too small");
  r.need(declared_bytes);
  const std::uint8_t* base = r.cursor();
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<std::uint32_t>(base[declared_bytes - 4 + i]) << (8 * i);
  if (crc32(base, declared_bytes - 4) != stored_crc)
    throw IntegrityError("section checksum mismatch for class " + std::to_string(s.class_id));

  const std::uint8_t kind_code = r.get_u8();
  if (kind_code > 2) throw FormatError(FormatFault::unknown_dtype, "unknown section kind");
  const auto kind = static_cast<SectionKind>(kind_code);
  if (kind != s.kind)
    throw IntegrityError("section kind does not match manifest");
  const std::uint8_t prec_code = r.get_u8();
  if (prec_code > 1) throw FormatError(FormatFault::unknown_dtype, "unknown precision code");
  const auto prec = static_cast<Precision>(prec_code);
  const std::uint8_t order = r.get_u8();
  if (order == 0) throw FormatError(FormatFault::corrupt_field, "section order must be >= 1");
  r.get_u8();  // flags
  std::vector<std::size_t> extents(order), ranks(order);
  for (std::uint8_t i = 0; i < order; ++i) {
    extents[i] = r.get_u32();
    ranks[i] = r.get_u32();
    if (extents[i] == 0 || ranks[i] == 0 || ranks[i] > extents[i])
      throw FormatError(FormatFault::corrupt_field, "bad section extents");
  }
  switch (kind) {
    case SectionKind::raw: {
      s.raw = Tensor(extents, get_elements(r, shape_product(extents), prec));
      break;
    }
    case SectionKind::hosvd: {
      HosvdFactorization f;
      f.original_shape = extents;
      f.ratio = ratio;
      f.core = Tensor(ranks, get_elements(r, shape_product(ranks), prec));
      for (std::uint8_t i = 0; i < order; ++i)
        f.factors.emplace_back(extents[i], ranks[i],
                               get_elements(r, extents[i] * ranks[i], prec));
      s.hosvd = std::move(f);
      break;
    }
    case SectionKind::svd: {
      SvdFactorization f;
      f.original_shape = extents;
      const std::size_t rank = ranks[0];
      std::size_t cols = 1;
      for (std::size_t i = 1; i < extents.size(); ++i) cols *= extents[i];
      f.u = Matrix(extents[0], rank, get_elements(r, extents[0] * rank, prec));
      f.singular_values = get_elements(r, rank, prec);
      f.v = Matrix(cols, rank, get_elements(r, cols * rank, prec));
      s.svd = std::move(f);
      break;
    }
  }
  r.get_u32();  // the checksum, verified above
  if (r.pos() - start != declared_bytes)
    throw FormatError(FormatFault::length_mismatch,
                      "section length does not match manifest declaration");
}

inline void validate_archive(const DistilledArchive& a) {
  if (a.latent_shape.empty()) throw ShapeError("archive latent shape must be non-empty");
  std::uint32_t prev = 0;
  bool first = true;
  for (const auto& s : a.sections) {
    if (!first && s.class_id <= prev)
      throw ValueError("archive sections must have strictly increasing class ids");
    prev = s.class_id;
    first = false;
    const std::size_t m = section_instance_count(s);
    if (s.item_ids.size() != m)
      throw ValueError("manifest id count does not match instance count for class " +
                       std::to_string(s.class_id));
    std::vector<std::size_t> expect_shape;
    expect_shape.push_back(m);
    expect_shape.insert(expect_shape.end(), a.latent_shape.begin(), a.latent_shape.end());
    const std::vector<std::size_t>& got = s.kind == SectionKind::raw ? s.raw.shape()
                                          : s.kind == SectionKind::hosvd
                                              ? s.hosvd.original_shape
                                              : s.svd.original_shape;
    if (got != expect_shape)
      throw ShapeError("section shape does not match (m x latent_shape) for class " +
                       std::to_string(s.class_id));
    if (s.kind == SectionKind::hosvd) validate_factorization(s.hosvd);
  }
}

}  // namespace detail

// Exact serialized size of one section (payload plus fixed overhead).
inline std::uint64_t section_storage_bytes(const ClassSection& s, Precision p) {
  return detail::section_bytes(s, p);
}

// Exact serialized size; every field is fixed-width so the size is fully
// determined by shapes and the manifest.
inline std::uint64_t distilled_archive_file_bytes(const DistilledArchive& a) {
  std::uint64_t n = distilled_fixed_bytes(a.latent_shape.size());
  for (const auto& s : a.sections)
    n += manifest_entry_bytes(s.item_ids) + detail::section_bytes(s, a.config.precision);
  return n;
}

inline std::vector<std::uint8_t> encode_distilled(DistilledArchive& a) {
  detail::validate_archive(a);
  a.total_bytes = distilled_archive_file_bytes(a);
  a.within_budget = a.total_bytes + a.model_bytes <= a.budget_bytes;

  ByteWriter w;
  w.put_bytes(reinterpret_cast<const std::uint8_t*>("LVDA"), 4);
  w.put_u32(1);
  w.put_u32(0);  // header_crc patched below
  w.put_u32(0);  // header_len patched below
  const std::size_t body_start = w.size();
  w.put_f64(a.config.ratio);
  w.put_u8(static_cast<std::uint8_t>(a.config.sigma_kind));
  w.put_f64(a.config.sigma_value);
  w.put_u64(a.config.master_seed);
  w.put_u8(static_cast<std::uint8_t>(a.config.method));
  w.put_u8(static_cast<std::uint8_t>(a.config.precision));
  w.put_u8(static_cast<std::uint8_t>(a.latent_shape.size()));
  for (std::size_t e : a.latent_shape) w.put_u32(static_cast<std::uint32_t>(e));
  w.put_u64(a.budget_bytes);
  w.put_u64(a.model_bytes);
  w.put_u64(a.total_bytes);
  w.put_u8(a.within_budget ? 1 : 0);
  w.put_u32(static_cast<std::uint32_t>(a.sections.size()));
  for (auto& s : a.sections) {
    s.byte_length = detail::section_bytes(s, a.config.precision);
    w.put_u32(s.class_id);
    w.put_u8(static_cast<std::uint8_t>(s.kind));
    w.put_u32(static_cast<std::uint32_t>(s.item_ids.size()));
    w.put_u64(s.byte_length);
    w.put_f64(s.selection_log_prob);
    for (const auto& id : s.item_ids) w.put_string(id);
  }
  const std::size_t body_end = w.size();
  for (auto& s : a.sections) {
    s.offset = w.size();
    detail::encode_section(w, s, a.config.precision);
    if (w.size() - s.offset != s.byte_length)
      throw Error("internal: section size bookkeeping mismatch");
  }
  std::vector<std::uint8_t> bytes = w.take();
  if (bytes.size() != a.total_bytes) throw Error("internal: archive size bookkeeping mismatch");
  const std::uint32_t hcrc = crc32(bytes.data() + body_start, body_end - body_start);
  const std::uint32_t hlen = static_cast<std::uint32_t>(body_end - body_start);
  for (int i = 0; i < 4; ++i) {
    bytes[8 + i] = static_cast<std::uint8_t>(hcrc >> (8 * i));
    bytes[12 + i] = static_cast<std::uint8_t>(hlen >> (8 * i));
  }
  return bytes;
}

inline DistilledArchive decode_distilled(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(r.cursor(), "LVDA", 4) != 0)
    throw FormatError(FormatFault::bad_magic, "not a distilled archive (bad magic)");
  r.skip(4);
  const std::uint32_t version = r.get_u32();
  if (version != 1)
    throw FormatError(FormatFault::version_mismatch,
                      "unsupported archive version " + std::to_string(version));
  const std::uint32_t stored_hcrc = r.get_u32();
  const std::uint32_t header_len = r.get_u32();
  r.need(header_len);
  if (crc32(r.cursor(), header_len) != stored_hcrc)
    throw IntegrityError("archive header checksum mismatch");

  DistilledArchive a;
  const std::size_t body_start = r.pos();
  a.config.ratio = r.get_f64();
  const std::uint8_t sigma_kind = r.get_u8();
  if (sigma_kind > 1) throw FormatError(FormatFault::corrupt_field, "bad sigma policy code");
  a.config.sigma_kind = static_cast<SigmaPolicyKind>(sigma_kind);
  a.config.sigma_value = r.get_f64();
  a.config.master_seed = r.get_u64();
  const std::uint8_t method = r.get_u8();
  if (method > 1) throw FormatError(FormatFault::corrupt_field, "bad selection method code");
  a.config.method = static_cast<SelectionMethod>(method);
  const std::uint8_t prec = r.get_u8();
  if (prec > 1) throw FormatError(FormatFault::unknown_dtype, "bad precision code");
  a.config.precision = static_cast<Precision>(prec);
  const std::uint8_t order = r.get_u8();
  if (order == 0) throw FormatError(FormatFault::corrupt_field, "latent order must be >= 1");
  a.latent_shape.resize(order);
  for (std::uint8_t i = 0; i < order; ++i) a.latent_shape[i] = r.get_u32();
  a.budget_bytes = r.get_u64();
  a.model_bytes = r.get_u64();
  a.total_bytes = r.get_u64();
  a.within_budget = r.get_u8() != 0;
  const std::uint32_t num_classes = r.get_u32();
  a.sections.resize(num_classes);
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    ClassSection& s = a.sections[c];
    s.class_id = r.get_u32();
    const std::uint8_t kind = r.get_u8();
    if (kind > 2) throw FormatError(FormatFault::unknown_dtype, "unknown section kind");
    s.kind = static_cast<SectionKind>(kind);
    const std::uint32_t m = r.get_u32();
    s.byte_length = r.get_u64();
    s.selection_log_prob = r.get_f64();
    s.item_ids.resize(m);
    for (std::uint32_t i = 0; i < m; ++i) s.item_ids[i] = r.get_string();
  }
  if (r.pos() - body_start != header_len)
    throw FormatError(FormatFault::length_mismatch,
                      "header length field does not match the manifest");

  for (auto& s : a.sections) {
    s.offset = r.pos();
    detail::decode_section(r, s, s.byte_length, a.config.ratio);
  }
  if (r.remaining() != 0)
    throw FormatError(FormatFault::length_mismatch, "trailing bytes after last section");

  // Accounting is recomputed on read and must agree with the stored block.
  if (a.total_bytes != bytes.size())
    throw IntegrityError("stored total_bytes does not match file size");
  if (a.within_budget != (a.total_bytes + a.model_bytes <= a.budget_bytes))
    throw IntegrityError("stored within_budget flag does not match accounting");
  std::uint64_t recomputed = distilled_archive_file_bytes(a);
  if (recomputed != a.total_bytes)
    throw IntegrityError("section accounting does not match file size");
  detail::validate_archive(a);
  return a;
}

inline void write_distilled(DistilledArchive& a, const std::string& path) {
  write_file_bytes(path, encode_distilled(a));
}

inline DistilledArchive read_distilled(const std::string& path) {
  return decode_distilled(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Tensor archive (.tar container of named tensors)
//
//   magic "LVTA" | u32 version=1 | u32 tensor_count
//   per tensor:
//     u32 name_len | name | u8 dtype | u8 order | u32 extent[order]
//     dtype==int8_affine: f64 scale | i32 zero_point
//     u64 payload_bytes | payload | u32 crc32 of the record so far
// ---------------------------------------------------------------------------

enum class ArchiveDtype : std::uint8_t { fp32 = 0, fp16 = 1, int8_affine = 2 };

inline std::uint64_t dtype_width(ArchiveDtype d) {
  switch (d) {
    case ArchiveDtype::fp32: return 4;
    case ArchiveDtype::fp16: return 2;
    case ArchiveDtype::int8_affine: return 1;
  }
  throw ValueError("unknown dtype");
}

struct ArchiveTensor {
  std::string name;
  ArchiveDtype dtype = ArchiveDtype::fp32;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> payload;  // raw little-endian element bytes
  double scale = 1.0;                 // int8_affine only
  std::int32_t zero_point = 0;        // int8_affine only

  std::size_t numel() const { return shape_product(shape); }
};

struct TensorArchive {
  std::vector<ArchiveTensor> tensors;
};

inline std::uint64_t tensor_record_bytes(const ArchiveTensor& t) {
  std::uint64_t n = 4 + t.name.size() + 1 + 1 + 4ull * t.shape.size();
  if (t.dtype == ArchiveDtype::int8_affine) n += 8 + 4;
  n += 8 + t.payload.size() + 4;
  return n;
}

inline std::uint64_t tensor_archive_file_bytes(const TensorArchive& a) {
  std::uint64_t n = 4 + 4 + 4;
  for (const auto& t : a.tensors) n += tensor_record_bytes(t);
  return n;
}

inline std::vector<std::uint8_t> encode_tensor_archive(const TensorArchive& a) {
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    const auto& t = a.tensors[i];
    if (t.shape.empty()) throw ShapeError("tensor '" + t.name + "' has empty shape");
    if (t.payload.size() != t.numel() * dtype_width(t.dtype))
      throw ShapeError("tensor '" + t.name + "' payload length does not match shape/dtype");
    for (std::size_t j = i + 1; j < a.tensors.size(); ++j)
      if (a.tensors[j].name == t.name)
        throw ValueError("duplicate tensor name '" + t.name + "'");
  }
  ByteWriter w;
  w.put_bytes(reinterpret_cast<const std::uint8_t*>("LVTA"), 4);
  w.put_u32(1);
  w.put_u32(static_cast<std::uint32_t>(a.tensors.size()));
  for (const auto& t : a.tensors) {
    const std::size_t start = w.size();
    w.put_string(t.name);
    w.put_u8(static_cast<std::uint8_t>(t.dtype));
    w.put_u8(static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t e : t.shape) w.put_u32(static_cast<std::uint32_t>(e));
    if (t.dtype == ArchiveDtype::int8_affine) {
      w.put_f64(t.scale);
      w.put_i32(t.zero_point);
    }
    w.put_u64(t.payload.size());
    w.put_bytes(t.payload.data(), t.payload.size());
    w.put_u32(crc32(w.bytes().data() + start, w.size() - start));
  }
  return w.take();
}

inline TensorArchive decode_tensor_archive(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.need(4);
  if (std::memcmp(r.cursor(), "LVTA", 4) != 0)
    throw FormatError(FormatFault::bad_magic, "not a tensor archive (bad magic)");
  r.skip(4);
  const std::uint32_t version = r.get_u32();
  if (version != 1)
    throw FormatError(FormatFault::version_mismatch,
                      "unsupported tensor archive version " + std::to_string(version));
  const std::uint32_t count = r.get_u32();
  TensorArchive a;
  a.tensors.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t start = r.pos();
    ArchiveTensor t;
    t.name = r.get_string();
    const std::uint8_t dtype = r.get_u8();
    if (dtype > 2) throw FormatError(FormatFault::unknown_dtype, "unknown tensor dtype");
    t.dtype = static_cast<ArchiveDtype>(dtype);
    const std::uint8_t order = r.get_u8();
    if (order == 0) throw FormatError(FormatFault::corrupt_field, "tensor order must be >= 1");
    t.shape.resize(order);
    for (std::uint8_t k = 0; k < order; ++k) {
      t.shape[k] = r.get_u32();
      if (t.shape[k] == 0) throw FormatError(FormatFault::corrupt_field, "zero tensor extent");
    }
    if (t.dtype == ArchiveDtype::int8_affine) {
      t.scale = r.get_f64();
      t.zero_point = r.get_i32();
    }
    const std::uint64_t plen = r.get_u64();
    if (plen != t.numel() * dtype_width(t.dtype))
      throw FormatError(FormatFault::length_mismatch,
                        "declared payload length does not match shape/dtype");
    r.need(plen);
    t.payload.assign(r.cursor(), r.cursor() + plen);
    r.skip(plen);
    const std::uint32_t expect = crc32(bytes.data() + start, r.pos() - start);
    if (r.get_u32() != expect)
      throw IntegrityError("tensor record checksum mismatch for '" + t.name + "'");
    a.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0)
    throw FormatError(FormatFault::length_mismatch, "trailing bytes after last tensor");
  return a;
}

inline void write_tensor_archive(const TensorArchive& a, const std::string& path) {
  write_file_bytes(path, encode_tensor_archive(a));
}

inline TensorArchive read_tensor_archive(const std::string& path) {
  return decode_tensor_archive(read_file_bytes(path));
}

}  // namespace lvdd
