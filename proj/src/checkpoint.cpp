#include "rvq/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rvq {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written as raw little-endian float32");

namespace {

struct NamedArray {
  std::string name;
  const Mat* data;
};

std::vector<NamedArray> checkpoint_arrays(const Model& model,
                                          const std::vector<AdamState>& adam) {
  std::vector<NamedArray> arrays;
  for (const auto& [name, p] : model.params) arrays.push_back({name, &p.node().value});
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    arrays.push_back({"adam_m." + model.params[i].first, &adam[i].m});
    arrays.push_back({"adam_v." + model.params[i].first, &adam[i].v});
  }
  arrays.push_back({"quantizer.codes", &model.codebook.codes});
  arrays.push_back({"quantizer.ema_sums", &model.codebook.sums});
  // The row-typed EMA count / unused-step accumulators are written separately.
  return arrays;
}

void write_array(std::ofstream& out, const std::string& name, const float* data, Index rows,
                 Index cols) {
  out << name << ' ' << rows << ' ' << cols << '\n';
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(rows * cols)));
}

std::string read_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("truncated checkpoint: " + path);
  return line;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model,
                     const std::vector<AdamState>& adam, long step, const RunConfig& config,
                     std::uint64_t vocab_hash) {
  if (adam.size() != model.params.size())
    throw std::invalid_argument("save_checkpoint: adam state count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);

  const auto arrays = checkpoint_arrays(model, adam);
  const std::size_t total = arrays.size() + 2;  // + ema_counts, unused_steps
  out << kCheckpointMagic << '\n';
  out << "config " << config.to_json() << '\n';
  std::ostringstream hex;
  hex << std::hex << vocab_hash;
  out << "vocab_hash " << hex.str() << '\n';
  out << "step " << step << '\n';
  out << "arrays " << total << '\n';
  for (const auto& a : arrays) write_array(out, a.name, a.data->data(), a.data->rows(), a.data->cols());
  write_array(out, "quantizer.ema_counts", model.codebook.counts.data(), 1,
              model.codebook.counts.cols());
  write_array(out, "quantizer.unused_steps", model.codebook.unused_steps.data(), 1,
              model.codebook.unused_steps.cols());
  if (!out) throw std::runtime_error("write failure on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path, std::uint64_t expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  if (read_line(in, path) != kCheckpointMagic)
    throw std::runtime_error("not a checkpoint (bad magic): " + path);

  LoadedCheckpoint ck;
  std::string line = read_line(in, path);
  if (line.rfind("config ", 0) != 0)
    throw std::runtime_error("checkpoint missing config header: " + path);
  ck.config = RunConfig::from_json(line.substr(7));

  line = read_line(in, path);
  if (line.rfind("vocab_hash ", 0) != 0)
    throw std::runtime_error("checkpoint missing vocab_hash header: " + path);
  ck.vocab_hash = std::stoull(line.substr(11), nullptr, 16);
  if (ck.vocab_hash != expected_vocab_hash)
    throw std::runtime_error(
        "refusing to load checkpoint: vocabulary hash mismatch (checkpoint was trained with a "
        "different vocabulary file)");

  line = read_line(in, path);
  if (line.rfind("step ", 0) != 0)
    throw std::runtime_error("checkpoint missing step header: " + path);
  ck.step = std::stol(line.substr(5));

  line = read_line(in, path);
  if (line.rfind("arrays ", 0) != 0)
    throw std::runtime_error("checkpoint missing arrays header: " + path);
  const std::size_t count = std::stoul(line.substr(7));

  ck.model = Model::init(ck.config.model, ck.config.variant, ck.config.train.seed);
  ck.config.apply_gate_mode(ck.model);
  ck.adam.clear();
  for (const auto& [name, p] : ck.model.params)
    ck.adam.push_back(AdamState::zeros(p.rows(), p.cols(), ck.config.train.adam));
  for (auto& st : ck.adam) st.step = ck.step;

  std::size_t filled = 0;
  for (std::size_t a = 0; a < count; ++a) {
    line = read_line(in, path);
    std::istringstream hdr(line);
    std::string name;
    Index rows = 0, cols = 0;
    if (!(hdr >> name >> rows >> cols))
      throw std::runtime_error("malformed array header in checkpoint: " + path);

    float* dst = nullptr;
    auto expect = [&](Index want_rows, Index want_cols) {
      if (rows != want_rows || cols != want_cols)
        throw std::runtime_error("checkpoint array shape mismatch for " + name);
    };
    if (name == "quantizer.codes") {
      expect(ck.model.codebook.codes.rows(), ck.model.codebook.codes.cols());
      dst = ck.model.codebook.codes.data();
    } else if (name == "quantizer.ema_sums") {
      expect(ck.model.codebook.sums.rows(), ck.model.codebook.sums.cols());
      dst = ck.model.codebook.sums.data();
    } else if (name == "quantizer.ema_counts") {
      expect(1, ck.model.codebook.counts.cols());
      dst = ck.model.codebook.counts.data();
    } else if (name == "quantizer.unused_steps") {
      expect(1, ck.model.codebook.unused_steps.cols());
      dst = ck.model.codebook.unused_steps.data();
    } else {
      std::string base = name;
      int kind = 0;  // 0 = param, 1 = adam m, 2 = adam v
      if (name.rfind("adam_m.", 0) == 0) {
        base = name.substr(7);
        kind = 1;
      } else if (name.rfind("adam_v.", 0) == 0) {
        base = name.substr(7);
        kind = 2;
      }
      for (std::size_t i = 0; i < ck.model.params.size(); ++i) {
        if (ck.model.params[i].first != base) continue;
        Mat& target = kind == 0 ? ck.model.params[i].second.node().value
                                : (kind == 1 ? ck.adam[i].m : ck.adam[i].v);
        expect(target.rows(), target.cols());
        dst = target.data();
        break;
      }
      if (dst == nullptr)
        throw std::runtime_error("unknown array in checkpoint: " + name);
    }
    const std::streamsize bytes =
        static_cast<std::streamsize>(sizeof(float) * static_cast<std::size_t>(rows * cols));
    if (!in.read(reinterpret_cast<char*>(dst), bytes))
      throw std::runtime_error("truncated array payload in checkpoint: " + name);
    ++filled;
  }
  const std::size_t expected = ck.model.params.size() * 3 + 4;
  if (filled != expected)
    throw std::runtime_error("checkpoint array count mismatch: " + path);
  return ck;
}

}  // namespace rvq
