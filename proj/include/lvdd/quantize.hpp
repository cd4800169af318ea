#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "lvdd/archive_io.hpp"
#include "lvdd/error.hpp"
#include "lvdd/half.hpp"
#include "lvdd/tensor.hpp"

namespace lvdd {

enum class QuantScheme : std::uint8_t { affine_int8 = 0, fp16 = 1 };

struct QuantizedTensor {
  QuantScheme scheme = QuantScheme::affine_int8;
  std::vector<std::int8_t> int_payload;    // affine_int8
  std::vector<std::uint16_t> half_payload; // fp16, raw bits
  double scale = 1.0;                      // affine only
  std::int32_t zero_point = 0;             // affine only, in [-128, 127]
  std::vector<std::size_t> original_shape;
};

// Per-tensor asymmetric INT8: x_q = clamp(round(x / s) + z). The calibration
// range always includes zero, which keeps z in [-128, 127] and bounds the
// round-trip error by s/2 even for one-sided value ranges. A constant tensor
// of value v uses s = max(1, |v|/127), z = 0. The scale is kept at fp32
// precision, which makes requantizing a dequantized tensor reproduce scale,
// zero point and payload exactly.
inline QuantizedTensor quantize_affine(const Tensor& t) {
  double lo = t[0], hi = t[0];
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw ValueError("quantize_affine: non-finite input");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  QuantizedTensor q;
  q.scheme = QuantScheme::affine_int8;
  q.original_shape = t.shape();
  if (hi == lo) {
    q.scale = static_cast<double>(static_cast<float>(std::max(1.0, std::abs(lo) / 127.0)));
    q.zero_point = 0;
  } else {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    q.scale = static_cast<double>(static_cast<float>((hi - lo) / 255.0));
    const long long z = std::llround(-128.0 - lo / q.scale);
    q.zero_point = static_cast<std::int32_t>(std::clamp(z, -128ll, 127ll));
  }
  q.int_payload.reserve(t.size());
  for (double v : t.data()) {
    const long long p = std::llround(v / q.scale) + q.zero_point;
    q.int_payload.push_back(static_cast<std::int8_t>(std::clamp(p, -128ll, 127ll)));
  }
  return q;
}

inline QuantizedTensor quantize_fp16(const Tensor& t) {
  QuantizedTensor q;
  q.scheme = QuantScheme::fp16;
  q.original_shape = t.shape();
  q.half_payload.reserve(t.size());
  for (double v : t.data()) {
    if (!std::isfinite(v)) throw ValueError("quantize_fp16: non-finite input");
    q.half_payload.push_back(double_to_half_bits(v));
  }
  return q;
}

inline Tensor dequantize(const QuantizedTensor& q) {
  const std::size_t n = shape_product(q.original_shape);
  std::vector<double> out(n);
  if (q.scheme == QuantScheme::affine_int8) {
    if (q.int_payload.size() != n || !(q.scale > 0.0))
      throw ValueError("dequantize: corrupt affine metadata");
    for (std::size_t i = 0; i < n; ++i)
      out[i] = q.scale * (static_cast<double>(q.int_payload[i]) - q.zero_point);
  } else {
    if (q.half_payload.size() != n)
      throw ValueError("dequantize: corrupt fp16 payload");
    for (std::size_t i = 0; i < n; ++i) out[i] = half_bits_to_double(q.half_payload[i]);
  }
  return Tensor(q.original_shape, std::move(out));
}

// --- archive entry conversions ---------------------------------------------

inline ArchiveTensor to_archive_tensor(const std::string& name, const Tensor& t) {
  ArchiveTensor a;
  a.name = name;
  a.dtype = ArchiveDtype::fp32;
  a.shape = t.shape();
  ByteWriter w;
  for (double v : t.data()) w.put_f32(static_cast<float>(v));
  a.payload = w.take();
  return a;
}

inline ArchiveTensor to_archive_tensor(const std::string& name, const QuantizedTensor& q) {
  ArchiveTensor a;
  a.name = name;
  a.shape = q.original_shape;
  if (q.scheme == QuantScheme::affine_int8) {
    a.dtype = ArchiveDtype::int8_affine;
    a.scale = q.scale;
    a.zero_point = q.zero_point;
    a.payload.assign(reinterpret_cast<const std::uint8_t*>(q.int_payload.data()),
                     reinterpret_cast<const std::uint8_t*>(q.int_payload.data()) +
                         q.int_payload.size());
  } else {
    a.dtype = ArchiveDtype::fp16;
    ByteWriter w;
    for (std::uint16_t h : q.half_payload) w.put_u16(h);
    a.payload = w.take();
  }
  return a;
}

// Widen/dequantize an archive entry back to a double tensor.
inline Tensor dequantize(const ArchiveTensor& a) {
  const std::size_t n = a.numel();
  ByteReader r(a.payload);
  std::vector<double> out(n);
  switch (a.dtype) {
    case ArchiveDtype::fp32:
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(r.get_f32());
      break;
    case ArchiveDtype::fp16:
      for (std::size_t i = 0; i < n; ++i) out[i] = half_bits_to_double(r.get_u16());
      break;
    case ArchiveDtype::int8_affine:
      if (!(a.scale > 0.0)) throw ValueError("dequantize: corrupt affine scale");
      for (std::size_t i = 0; i < n; ++i)
        out[i] = a.scale * (static_cast<double>(static_cast<std::int8_t>(r.get_u8())) -
                            a.zero_point);
      break;
  }
  return Tensor(a.shape, std::move(out));
}

// --- archive-level policy ---------------------------------------------------

// Fully connected tensors get INT8, everything else FP16. The predicate is
// rank == 2 unless a name pattern overrides it.
struct QuantPolicy {
  std::optional<std::string> fc_name_pattern;  // ECMAScript regex

  bool is_fc(const ArchiveTensor& t) const {
    if (fc_name_pattern) return std::regex_search(t.name, std::regex(*fc_name_pattern));
    return t.shape.size() == 2;
  }

  static QuantPolicy fc_int8_rest_fp16() { return QuantPolicy{}; }
};

struct TensorQuantStats {
  std::string name;
  ArchiveDtype dtype = ArchiveDtype::fp32;
  std::uint64_t params = 0;
  std::uint64_t fp32_payload_bytes = 0;
  std::uint64_t quant_payload_bytes = 0;
  double payload_ratio = 1.0;
};

struct QuantReport {
  std::vector<TensorQuantStats> per_tensor;
  std::uint64_t params_total = 0;
  std::uint64_t params_int8 = 0;
  std::uint64_t fp32_payload_bytes = 0;
  std::uint64_t quant_payload_bytes = 0;
  std::uint64_t fp32_file_bytes = 0;   // serialized input archive
  std::uint64_t quant_file_bytes = 0;  // serialized quantized archive
  double payload_ratio = 1.0;          // payload-only
  double total_ratio = 1.0;            // with metadata (file sizes)
  double int8_param_fraction = 0.0;
};

struct QuantizeResult {
  TensorArchive archive;
  QuantReport report;
};

inline QuantizeResult archive_quantize(const TensorArchive& in, const QuantPolicy& policy) {
  if (in.tensors.empty()) throw ValueError("archive_quantize: empty archive");
  QuantizeResult res;
  res.report.fp32_file_bytes = tensor_archive_file_bytes(in);
  for (const auto& t : in.tensors) {
    ArchiveTensor out;
    if (t.dtype == ArchiveDtype::fp32) {
      const Tensor dense = dequantize(t);
      out = policy.is_fc(t) ? to_archive_tensor(t.name, quantize_affine(dense))
                            : to_archive_tensor(t.name, quantize_fp16(dense));
    } else {
      out = t;  // already quantized entries pass through
    }
    TensorQuantStats st;
    st.name = t.name;
    st.dtype = out.dtype;
    st.params = t.numel();
    st.fp32_payload_bytes = 4ull * st.params;
    st.quant_payload_bytes = out.payload.size();
    st.payload_ratio =
        static_cast<double>(st.fp32_payload_bytes) / static_cast<double>(st.quant_payload_bytes);
    res.report.params_total += st.params;
    if (out.dtype == ArchiveDtype::int8_affine) res.report.params_int8 += st.params;
    res.report.fp32_payload_bytes += st.fp32_payload_bytes;
    res.report.quant_payload_bytes += st.quant_payload_bytes;
    res.report.per_tensor.push_back(std::move(st));
    res.archive.tensors.push_back(std::move(out));
  }
  res.report.quant_file_bytes = tensor_archive_file_bytes(res.archive);
  res.report.payload_ratio = static_cast<double>(res.report.fp32_payload_bytes) /
                             static_cast<double>(res.report.quant_payload_bytes);
  res.report.total_ratio = static_cast<double>(res.report.fp32_file_bytes) /
                           static_cast<double>(res.report.quant_file_bytes);
  res.report.int8_param_fraction = static_cast<double>(res.report.params_int8) /
                                   static_cast<double>(res.report.params_total);
  return res;
}

}  // namespace lvdd
