// src/bundle-io.cc

// Copyright 2026  The dvad Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dvad/bundle-io.h"

#include <bit>
#include <map>
#include <vector>

#include <zlib.h>

#include "dvad/io-util.h"

namespace dvad {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'A', 'D'};

class Writer {
 public:
  void U32(uint32_t v) { Bytes(v, 4); }
  void U64(uint64_t v) { Bytes(v, 8); }
  void I64(int64_t v) { U64(static_cast<uint64_t>(v)); }
  void F64(double v) { U64(std::bit_cast<uint64_t>(v)); }
  void Text(const std::string &s) {
    U64(s.size());
    out_ += s;
  }
  void Vector(const Eigen::VectorXd &v) {
    U64(static_cast<uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) F64(v[i]);
  }
  template <typename M>
  void Matrix(const M &m) {
    U64(static_cast<uint64_t>(m.rows()));
    U64(static_cast<uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) F64(m(r, c));
  }
  void Raw(const std::string &s) { out_ += s; }
  std::string &str() { return out_; }

 private:
  void Bytes(uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string &bytes, std::string where)
      : data_(bytes), where_(std::move(where)) {}

  uint32_t U32() { return static_cast<uint32_t>(Bytes(4)); }
  uint64_t U64() { return Bytes(8); }
  int64_t I64() { return static_cast<int64_t>(U64()); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Text() { return Raw(Count(1)); }
  Eigen::VectorXd Vector() {
    Eigen::VectorXd v(Count(8));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = F64();
    return v;
  }
  RowMatrix Matrix() {
    const uint64_t rows = U64(), cols = U64();
    if (cols != 0 && rows > Remaining() / 8 / cols) Truncated();
    RowMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = F64();
    return m;
  }
  std::string Raw(uint64_t n) {
    if (n > Remaining()) Truncated();
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  uint64_t Remaining() const { return data_.size() - pos_; }
  void ExpectEnd() const {
    if (Remaining() != 0)
      throw DataError("bundle section '" + where_ + "' has trailing bytes");
  }

 private:
  // Element count whose payload of `width`-byte items must fit in the rest.
  uint64_t Count(uint64_t width) {
    const uint64_t n = U64();
    if (n > Remaining() / width) Truncated();
    return n;
  }
  uint64_t Bytes(int n) {
    if (Remaining() < static_cast<uint64_t>(n)) Truncated();
    uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  [[noreturn]] void Truncated() const {
    throw DataError("bundle is truncated in '" + where_ + "'");
  }

  const std::string &data_;
  std::string where_;
  size_t pos_ = 0;
};

uint32_t Crc32(const std::string &bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef *>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<uint32_t>(crc);
}

void PutMfcc(const MfccConfig &m, Writer *w) {
  w->I64(m.num_ceps);
  w->I64(m.num_mel_filters);
  w->I64(m.fft_length);
  w->I64(m.sample_rate_hz);
  w->F64(m.low_hz);
  w->F64(m.high_hz);
  w->F64(m.log_floor);
  w->U64(m.weighting_enabled);
  w->I64(m.noise_window_frames);
  w->F64(m.noise_bias);
  w->F64(m.noise_smoothing);
}

MfccConfig GetMfcc(Reader *r) {
  MfccConfig m;
  m.num_ceps = static_cast<int>(r->I64());
  m.num_mel_filters = static_cast<int>(r->I64());
  m.fft_length = static_cast<int>(r->I64());
  m.sample_rate_hz = static_cast<int>(r->I64());
  m.low_hz = r->F64();
  m.high_hz = r->F64();
  m.log_floor = r->F64();
  m.weighting_enabled = r->U64() != 0;
  m.noise_window_frames = static_cast<int>(r->I64());
  m.noise_bias = r->F64();
  m.noise_smoothing = r->F64();
  return m;
}

void PutStandardizer(const Standardizer &s, Writer *w) {
  w->Vector(s.mean);
  w->Vector(s.stddev);
  w->Vector(s.range_lo);
  w->Vector(s.range_hi);
  Eigen::VectorXd flags(s.degenerate.size());
  for (size_t i = 0; i < s.degenerate.size(); ++i) flags[i] = s.degenerate[i] ? 1.0 : 0.0;
  w->Vector(flags);
}

Standardizer GetStandardizer(Reader *r) {
  Standardizer s;
  s.mean = r->Vector();
  s.stddev = r->Vector();
  s.range_lo = r->Vector();
  s.range_hi = r->Vector();
  Eigen::VectorXd flags = r->Vector();
  const Eigen::Index d = s.mean.size();
  if (s.stddev.size() != d || s.range_lo.size() != d || s.range_hi.size() != d ||
      flags.size() != d)
    throw DataError("bundle standardizer has inconsistent sizes");
  for (Eigen::Index i = 0; i < d; ++i) s.degenerate.push_back(flags[i] != 0.0);
  return s;
}

void PutLayers(const std::vector<LayerParams> &layers, Writer *w) {
  w->U64(layers.size());
  for (const LayerParams &p : layers) {
    w->Matrix(p.weights);
    w->Vector(p.biases);
  }
}

std::vector<LayerParams> GetLayers(Reader *r) {
  const uint64_t n = r->U64();
  if (n > r->Remaining()) throw DataError("bundle layer count is corrupt");
  std::vector<LayerParams> layers(n);
  for (LayerParams &p : layers) {
    p.weights = r->Matrix();
    p.biases = r->Vector();
  }
  return layers;
}

void PutDed(const DedModel &m, Writer *w) {
  w->I64(ToInt(m.hypothesis));
  PutLayers(m.encoder, w);
  PutLayers(m.decoder, w);
}

DedModel GetDed(Reader *r) {
  DedModel m;
  m.hypothesis = ToHypothesis(static_cast<int>(r->I64()));
  m.encoder = GetLayers(r);
  m.decoder = GetLayers(r);
  m.Check();
  return m;
}

void PutSvm(const SvmModel &m, Writer *w) {
  w->Text(ErrorModeName(m.mode));
  w->Vector(m.weights);
  w->F64(m.bias);
}

SvmModel GetSvm(Reader *r) {
  SvmModel m;
  m.mode = ParseErrorMode(r->Text());
  m.weights = r->Vector();
  m.bias = r->F64();
  return m;
}

void PutEmbedding(const DiffusionEmbedding &e, Writer *w) {
  w->Vector(e.eigenvalues);
  w->Matrix(e.right_vectors);
  w->Matrix(e.coords);
  w->Matrix(e.softmax_coords);
  w->Matrix(e.reference.points);
  w->Vector(e.reference.local_scales);
  w->Vector(e.reference.kernel_degree);
  w->I64(e.reference.k);
}

DiffusionEmbedding GetEmbedding(Reader *r) {
  DiffusionEmbedding e;
  e.eigenvalues = r->Vector();
  e.right_vectors = r->Matrix();
  e.coords = r->Matrix();
  e.softmax_coords = r->Matrix();
  e.reference.points = r->Matrix();
  e.reference.local_scales = r->Vector();
  e.reference.kernel_degree = r->Vector();
  e.reference.k = static_cast<int>(r->I64());
  const Eigen::Index n = e.reference.points.rows();
  if (e.reference.local_scales.size() != n || e.reference.kernel_degree.size() != n)
    throw DataError("bundle embedding reference has inconsistent sizes");
  return e;
}

void PutMetadata(const ModelBundle &b, Writer *w) {
  const BundleMetadata &m = b.metadata;
  w->I64(b.sample_rate_hz);
  w->I64(b.frame_length);
  w->I64(b.hop);
  w->U64(m.seed);
  w->Text(m.config_hash);
  w->Text(m.library_version);
  w->U64(m.per_batch_dm);
  w->I64(m.ded_rows0);
  w->I64(m.ded_rows1);
  w->I64(m.classifier_rows);
}

void GetMetadata(Reader *r, ModelBundle *b) {
  BundleMetadata &m = b->metadata;
  b->sample_rate_hz = static_cast<int>(r->I64());
  b->frame_length = static_cast<int>(r->I64());
  b->hop = static_cast<int>(r->I64());
  m.seed = r->U64();
  m.config_hash = r->Text();
  m.library_version = r->Text();
  m.per_batch_dm = r->U64() != 0;
  m.ded_rows0 = r->I64();
  m.ded_rows1 = r->I64();
  m.classifier_rows = r->I64();
}

}  // namespace

std::string SerializeBundle(const ModelBundle &bundle) {
  bundle.Check();
  std::vector<std::pair<std::string, Writer>> sections;
  auto add = [&](const std::string &name) -> Writer & {
    sections.emplace_back(name, Writer());
    return sections.back().second;
  };
  PutMetadata(bundle, &add("metadata"));
  PutMfcc(bundle.mfcc, &add("mfcc"));
  PutStandardizer(bundle.standardizer, &add("standardizer"));
  PutDed(bundle.ded0, &add("ded0"));
  PutDed(bundle.ded1, &add("ded1"));
  PutSvm(bundle.svm_realtime, &add("svm_realtime"));
  PutSvm(bundle.svm_batch, &add("svm_batch"));
  PutEmbedding(bundle.embedding0, &add("embedding0"));
  PutEmbedding(bundle.embedding1, &add("embedding1"));

  Writer out;
  out.Raw(std::string(kMagic, 4));
  out.U32(kBundleFormatVersion);
  out.U32(static_cast<uint32_t>(sections.size()));
  for (auto &[name, w] : sections) {
    out.U32(static_cast<uint32_t>(name.size()));
    out.Raw(name);
    out.U64(w.str().size());
    out.Raw(w.str());
    out.U32(Crc32(w.str()));
  }
  return std::move(out.str());
}

ModelBundle DeserializeBundle(const std::string &bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kMagic, 4) != 0)
    throw DataError("not a bundle");
  Reader header(bytes, "header");
  header.Raw(4);
  const uint32_t version = header.U32();
  if (version != kBundleFormatVersion)
    throw DataError("unsupported bundle version " + std::to_string(version) +
                    " (this build reads version " +
                    std::to_string(kBundleFormatVersion) + ")");
  const uint32_t count = header.U32();

  std::map<std::string, std::string> payloads;
  for (uint32_t s = 0; s < count; ++s) {
    const std::string name = header.Raw(header.U32());
    const std::string payload = header.Raw(header.U64());
    if (header.U32() != Crc32(payload))
      throw DataError("bundle checksum failure in section '" + name + "'");
    if (!payloads.emplace(name, payload).second)
      throw DataError("bundle section '" + name + "' appears twice");
  }
  header.ExpectEnd();

  ModelBundle b;
  auto read = [&](const std::string &name, auto &&fn) {
    auto it = payloads.find(name);
    if (it == payloads.end())
      throw DataError("bundle is missing section '" + name + "'");
    Reader r(it->second, name);
    fn(&r);
    r.ExpectEnd();
  };
  read("metadata", [&](Reader *r) { GetMetadata(r, &b); });
  read("mfcc", [&](Reader *r) { b.mfcc = GetMfcc(r); });
  read("standardizer", [&](Reader *r) { b.standardizer = GetStandardizer(r); });
  read("ded0", [&](Reader *r) { b.ded0 = GetDed(r); });
  read("ded1", [&](Reader *r) { b.ded1 = GetDed(r); });
  read("svm_realtime", [&](Reader *r) { b.svm_realtime = GetSvm(r); });
  read("svm_batch", [&](Reader *r) { b.svm_batch = GetSvm(r); });
  read("embedding0", [&](Reader *r) { b.embedding0 = GetEmbedding(r); });
  read("embedding1", [&](Reader *r) { b.embedding1 = GetEmbedding(r); });
  b.Check();
  return b;
}

void SaveBundle(const ModelBundle &bundle, const std::string &path) {
  WriteFileAtomic(path, SerializeBundle(bundle));
}

ModelBundle LoadBundle(const std::string &path) {
  return DeserializeBundle(ReadFileBytes(path));
}

std::string BundleHash(const ModelBundle &bundle) {
  return Sha256Hex(SerializeBundle(bundle));
}

}  // namespace dvad
