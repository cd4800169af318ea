#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "lvdd/archive_io.hpp"
#include "lvdd/quantize.hpp"
#include "oracles.hpp"

using namespace lvdd;

namespace {

std::string temp_path(const std::string& stem) {
  static int counter = 0;
  return (std::filesystem::temp_directory_path() /
          ("lvdd_test_" + stem + "_" + std::to_string(counter++)))
      .string();
}

LatentDataset small_dataset(std::size_t classes, std::size_t per_class,
                            std::vector<std::size_t> shape, std::uint64_t seed) {
  Rng rng(seed);
  LatentDataset d;
  d.latent_shape = shape;
  d.num_classes = static_cast<std::uint32_t>(classes);
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      std::vector<double> data(shape_product(shape));
      for (double& v : data) v = static_cast<double>(static_cast<float>(rng.next_gaussian()));
      d.items.push_back(LatentItem{"c" + std::to_string(c) + "_i" + std::to_string(i),
                                   static_cast<std::uint32_t>(c), Tensor(shape, data)});
    }
  return d;
}

}  // namespace

TEST_CASE("empty dataset round trips") {
  LatentDataset d;
  d.latent_shape = {2, 2};
  d.num_classes = 0;
  const std::string path = temp_path("empty");
  write_latent_dataset(d, path);
  LatentDataset back = read_latent_dataset(path);
  CHECK(back.items.empty());
  CHECK(back.latent_shape == d.latent_shape);
  std::remove(path.c_str());
}

TEST_CASE("single-item dataset has an exactly predictable file size") {
  LatentDataset d = small_dataset(1, 1, {2, 2}, 1);
  const std::string path = temp_path("one");
  write_latent_dataset(d, path);
  const auto bytes = read_file_bytes(path);
  // header: magic+version+classes+items+order+2 extents; record: id + class + 4 floats
  const std::uint64_t want = (4 + 4 + 4 + 4 + 1 + 8) + (4 + d.items[0].id.size() + 4 + 16);
  CHECK(bytes.size() == want);
  CHECK(bytes.size() == latent_dataset_file_bytes(d));
  std::remove(path.c_str());
}

TEST_CASE("a thousand random items round trip bit exactly") {
  LatentDataset d = small_dataset(10, 100, {3, 4}, 2);
  const std::string path = temp_path("big");
  write_latent_dataset(d, path);
  const auto bytes1 = read_file_bytes(path);
  LatentDataset back = read_latent_dataset(path);
  REQUIRE(back.items.size() == 1000);
  const std::string path2 = temp_path("big2");
  write_latent_dataset(back, path2);
  const auto bytes2 = read_file_bytes(path2);
  CHECK(crc32(bytes1.data(), bytes1.size()) == crc32(bytes2.data(), bytes2.size()));
  CHECK(bytes1 == bytes2);
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(back.items[i].id == d.items[i].id);
    CHECK(back.items[i].class_id == d.items[i].class_id);
    CHECK(back.items[i].tensor.data() == d.items[i].tensor.data());
  }
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("latent dataset reader reports distinct faults") {
  LatentDataset d = small_dataset(1, 2, {2}, 3);
  auto bytes = encode_latent_dataset(d);

  SECTION("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    try {
      decode_latent_dataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::bad_magic);
    }
  }
  SECTION("version mismatch") {
    auto bad = bytes;
    bad[4] = 9;
    try {
      decode_latent_dataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::version_mismatch);
    }
  }
  SECTION("truncated") {
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    try {
      decode_latent_dataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::truncated);
    }
  }
  SECTION("trailing bytes") {
    auto bad = bytes;
    bad.push_back(0);
    try {
      decode_latent_dataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::length_mismatch);
    }
  }
  SECTION("class id out of range") {
    auto bad = bytes;
    // first record: u32 id_len (2) + "c0" + u32 class_id
    const std::size_t class_off = (4 + 4 + 4 + 4 + 1 + 4) + 4 + d.items[0].id.size();
    bad[class_off] = 9;
    try {
      decode_latent_dataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::corrupt_field);
    }
  }
}

namespace {

DistilledArchive sample_archive(std::uint64_t seed, Precision prec = Precision::fp32) {
  Rng rng(seed);
  DistilledArchive a;
  a.config.ratio = 0.5;
  a.config.precision = prec;
  a.config.master_seed = seed;
  a.latent_shape = {3, 4, 5};
  a.budget_bytes = 1 << 20;
  a.model_bytes = 1 << 10;
  for (std::uint32_t c = 0; c < 3; ++c) {
    ClassSection s;
    s.class_id = c;
    s.selection_log_prob = -1.5 * (c + 1);
    const std::size_t m = 4;
    Tensor stacked = oracle::random_tensor(rng, {m, 3, 4, 5});
    for (std::size_t i = 0; i < m; ++i) s.item_ids.push_back("id" + std::to_string(c * 10 + i));
    if (c == 1) {
      s.kind = SectionKind::raw;
      s.raw = stacked;
    } else if (c == 2) {
      s.kind = SectionKind::svd;
      s.svd = svd_compress(stacked, 2);
    } else {
      s.kind = SectionKind::hosvd;
      s.hosvd = hosvd_decompose(stacked, 0.5);
    }
    a.sections.push_back(std::move(s));
  }
  return a;
}

}  // namespace

TEST_CASE("distilled archive file size equals header plus section storage exactly") {
  DistilledArchive a = sample_archive(4);
  auto bytes = encode_distilled(a);
  CHECK(bytes.size() == a.total_bytes);
  CHECK(bytes.size() == distilled_archive_file_bytes(a));
  std::uint64_t sections = 0;
  for (const auto& s : a.sections) {
    CHECK(s.byte_length == section_storage_bytes(s, a.config.precision));
    sections += s.byte_length;
  }
  std::uint64_t header = distilled_fixed_bytes(a.latent_shape.size());
  for (const auto& s : a.sections) header += manifest_entry_bytes(s.item_ids);
  CHECK(header + sections == bytes.size());
}

TEST_CASE("distilled archive round trips its factorizations bit exactly") {
  for (Precision prec : {Precision::fp32, Precision::fp16}) {
    DistilledArchive a = sample_archive(5, prec);
    auto bytes = encode_distilled(a);
    DistilledArchive back = decode_distilled(bytes);
    auto bytes2 = encode_distilled(back);
    CHECK(bytes == bytes2);
    CHECK(back.sections[0].hosvd.core.shape() == a.sections[0].hosvd.core.shape());
    CHECK(back.sections[1].raw.shape() == a.sections[1].raw.shape());
    CHECK(back.sections[2].svd.u.cols() == a.sections[2].svd.u.cols());
    CHECK(back.config.ratio == a.config.ratio);
    CHECK(back.config.master_seed == a.config.master_seed);
  }
}

TEST_CASE("storage_bytes matches serialized section lengths for random factorizations") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    DistilledArchive a;
    a.config.ratio = 0.3 + 0.7 * rng.next_double();
    a.latent_shape = {2 + rng.next_u64() % 4, 2 + rng.next_u64() % 4, 2 + rng.next_u64() % 4};
    a.budget_bytes = 1 << 24;
    std::vector<std::size_t> stacked{2 + rng.next_u64() % 5};
    stacked.insert(stacked.end(), a.latent_shape.begin(), a.latent_shape.end());
    Tensor z = oracle::random_tensor(rng, stacked);
    ClassSection s;
    s.class_id = 0;
    for (std::size_t i = 0; i < stacked[0]; ++i) s.item_ids.push_back("x" + std::to_string(i));
    if (trial % 3 == 0) {
      s.kind = SectionKind::raw;
      s.raw = z;
    } else if (trial % 3 == 1) {
      s.kind = SectionKind::hosvd;
      s.hosvd = hosvd_decompose(z, a.config.ratio);
    } else {
      s.kind = SectionKind::svd;
      s.svd = svd_compress(z, 1 + rng.next_u64() % stacked[0]);
    }
    const std::uint64_t want = section_storage_bytes(s, Precision::fp32);
    a.sections.push_back(std::move(s));
    auto bytes = encode_distilled(a);
    CHECK(a.sections[0].byte_length == want);
    // section length on disk: file size minus header/manifest
    const std::uint64_t header = distilled_fixed_bytes(a.latent_shape.size()) +
                                 manifest_entry_bytes(a.sections[0].item_ids);
    CHECK(bytes.size() - header == want);
  }
}

TEST_CASE("tampering with any payload byte is detected, never silent") {
  DistilledArchive a = sample_archive(7);
  auto bytes = encode_distilled(a);
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto bad = bytes;
    const std::size_t sec = rng.next_u64() % a.sections.size();
    const std::size_t off = a.sections[sec].offset + rng.next_u64() % a.sections[sec].byte_length;
    bad[off] ^= static_cast<std::uint8_t>(1 + rng.next_u64() % 255);
    CHECK_THROWS_AS(decode_distilled(bad), IntegrityError);
  }
}

TEST_CASE("every header and manifest byte is covered by a typed check") {
  DistilledArchive a = sample_archive(9);
  auto bytes = encode_distilled(a);
  const std::size_t body_end = a.sections[0].offset;
  for (std::size_t pos = 0; pos < body_end; ++pos) {
    auto bad = bytes;
    bad[pos] ^= 0x5a;
    if (pos < 4) {
      CHECK_THROWS_AS(decode_distilled(bad), FormatError);  // magic
    } else if (pos < 8) {
      CHECK_THROWS_AS(decode_distilled(bad), FormatError);  // version
    } else if (pos < 16) {
      // crc or length field: integrity mismatch, or truncation if the
      // corrupted length overruns the file
      CHECK_THROWS(decode_distilled(bad));
    } else {
      CHECK_THROWS_AS(decode_distilled(bad), IntegrityError);  // header body
    }
  }
}

TEST_CASE("within_budget flag is recomputed from the stored accounting") {
  DistilledArchive a = sample_archive(10);
  a.budget_bytes = 1ull << 30;
  auto bytes = encode_distilled(a);
  CHECK(a.within_budget);
  DistilledArchive back = decode_distilled(bytes);
  CHECK(back.within_budget == (back.total_bytes + back.model_bytes <= back.budget_bytes));
}

TEST_CASE("tensor archive round trips every dtype bit exactly") {
  Rng rng(11);
  TensorArchive a;
  std::vector<double> f32(24);
  for (double& v : f32) v = rng.next_gaussian();
  a.tensors.push_back(to_archive_tensor("dense", Tensor({4, 6}, f32)));
  std::vector<double> vals(30);
  for (double& v : vals) v = rng.next_gaussian();
  a.tensors.push_back(to_archive_tensor("half", quantize_fp16(Tensor({5, 6}, vals))));
  std::vector<double> vals2(16);
  for (double& v : vals2) v = 3 * rng.next_gaussian();
  a.tensors.push_back(to_archive_tensor("int8", quantize_affine(Tensor({4, 4}, vals2))));

  const std::string path = temp_path("ta");
  write_tensor_archive(a, path);
  TensorArchive back = read_tensor_archive(path);
  REQUIRE(back.tensors.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.tensors[i].name == a.tensors[i].name);
    CHECK(back.tensors[i].dtype == a.tensors[i].dtype);
    CHECK(back.tensors[i].payload == a.tensors[i].payload);
  }
  CHECK(back.tensors[2].scale == a.tensors[2].scale);
  CHECK(back.tensors[2].zero_point == a.tensors[2].zero_point);
  const auto bytes = read_file_bytes(path);
  CHECK(bytes.size() == tensor_archive_file_bytes(a));
  std::remove(path.c_str());
}

TEST_CASE("quantized archive size matches the report accounting exactly") {
  Rng rng(12);
  TensorArchive a;
  for (int i = 0; i < 4; ++i) {
    std::vector<std::size_t> shape =
        i % 2 ? std::vector<std::size_t>{8, 8} : std::vector<std::size_t>{2, 4, 3, 3};
    std::vector<double> data(shape_product(shape));
    for (double& v : data) v = rng.next_gaussian();
    a.tensors.push_back(to_archive_tensor("t" + std::to_string(i), Tensor(shape, data)));
  }
  QuantizeResult r = archive_quantize(a, QuantPolicy::fc_int8_rest_fp16());
  const std::string path = temp_path("qa");
  write_tensor_archive(r.archive, path);
  CHECK(read_file_bytes(path).size() == r.report.quant_file_bytes);
  std::remove(path.c_str());
}

TEST_CASE("tensor archive reader reports unknown dtypes and bad lengths") {
  TensorArchive a;
  a.tensors.push_back(to_archive_tensor("t", Tensor({2, 2}, {1, 2, 3, 4})));
  auto bytes = encode_tensor_archive(a);

  SECTION("unknown dtype") {
    auto bad = bytes;
    bad[12 + 4 + 1] = 9;  // dtype byte after the name
    try {
      decode_tensor_archive(bad);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.fault == FormatFault::unknown_dtype);
    }
  }
  SECTION("payload checksum") {
    auto bad = bytes;
    bad[bad.size() - 6] ^= 0xff;
    CHECK_THROWS_AS(decode_tensor_archive(bad), IntegrityError);
  }
  SECTION("duplicate names rejected on write") {
    a.tensors.push_back(to_archive_tensor("t", Tensor({1}, {0.0})));
    CHECK_THROWS_AS(encode_tensor_archive(a), ValueError);
  }
}
