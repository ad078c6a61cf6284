#include "depthstyle/onnx_model.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "depthstyle/error.hpp"
#include "depthstyle/image_io.hpp"

namespace depthstyle {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  raise(ErrorCategory::BackendFailure, "ONNX model: " + msg);
}

// Just enough protobuf wire-format decoding for the ONNX subset we execute.
class PbReader {
 public:
  PbReader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

  bool done() const { return p_ >= end_; }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    int shift = 0;
    while (true) {
      if (p_ >= end_ || shift > 63) fail("truncated varint");
      const std::uint8_t byte = *p_++;
      v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
      if (!(byte & 0x80)) break;
      shift += 7;
    }
    return v;
  }

  std::uint32_t fixed32() {
    if (end_ - p_ < 4) fail("truncated fixed32");
    std::uint32_t v;
    std::memcpy(&v, p_, 4);  // protobuf fixed fields are little-endian
    p_ += 4;
    return v;
  }

  // Returns {field_number, wire_type}.
  std::pair<int, int> tag() {
    const std::uint64_t t = varint();
    return {static_cast<int>(t >> 3), static_cast<int>(t & 7)};
  }

  PbReader submessage() {
    const std::uint64_t len = varint();
    if (static_cast<std::uint64_t>(end_ - p_) < len) fail("truncated length-delimited field");
    PbReader sub(p_, len);
    p_ += len;
    return sub;
  }

  std::string string_field() {
    PbReader sub = submessage();
    return std::string(reinterpret_cast<const char*>(sub.p_),
                       static_cast<std::size_t>(sub.end_ - sub.p_));
  }

  void skip(int wire_type) {
    switch (wire_type) {
      case 0: varint(); break;
      case 1:
        if (end_ - p_ < 8) fail("truncated fixed64");
        p_ += 8;
        break;
      case 2: submessage(); break;
      case 5: fixed32(); break;
      default: fail("unsupported wire type " + std::to_string(wire_type));
    }
  }

  const std::uint8_t* data() const { return p_; }
  std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

 private:
  const std::uint8_t* p_;
  const std::uint8_t* end_;
};

// Repeated int64 fields appear either packed (wire type 2) or one value per
// tag (wire type 0); accept both.
void read_repeated_int64(PbReader& r, int wire_type, std::vector<std::int64_t>& out) {
  if (wire_type == 0) {
    out.push_back(static_cast<std::int64_t>(r.varint()));
  } else if (wire_type == 2) {
    PbReader sub = r.submessage();
    while (!sub.done()) {
      out.push_back(static_cast<std::int64_t>(sub.varint()));
    }
  } else {
    fail("unexpected wire type for repeated int64");
  }
}

struct TensorInit {
  std::string name;
  std::vector<std::int64_t> dims;
  std::int64_t data_type = 0;
  std::vector<float> values;
};

constexpr std::int64_t kFloatDataType = 1;

TensorInit parse_tensor(PbReader r) {
  TensorInit t;
  while (!r.done()) {
    auto [field, wt] = r.tag();
    switch (field) {
      case 1: read_repeated_int64(r, wt, t.dims); break;
      case 2: t.data_type = static_cast<std::int64_t>(r.varint()); break;
      case 4: {  // float_data
        if (wt == 5) {
          std::uint32_t bits = r.fixed32();
          float f;
          std::memcpy(&f, &bits, 4);
          t.values.push_back(f);
        } else if (wt == 2) {
          PbReader sub = r.submessage();
          while (!sub.done()) {
            std::uint32_t bits = sub.fixed32();
            float f;
            std::memcpy(&f, &bits, 4);
            t.values.push_back(f);
          }
        } else {
          fail("unexpected wire type for float_data");
        }
        break;
      }
      case 8: t.name = r.string_field(); break;
      case 9: {  // raw_data: little-endian float32
        PbReader sub = r.submessage();
        if (sub.remaining() % 4 != 0) fail("raw_data length not a multiple of 4");
        const std::size_t n = sub.remaining() / 4;
        t.values.resize(n);
        std::memcpy(t.values.data(), sub.data(), n * 4);
        break;
      }
      default: r.skip(wt); break;
    }
  }
  return t;
}

struct Attr {
  std::string name;
  std::int64_t i = 0;
  std::vector<std::int64_t> ints;
};

struct Node {
  std::string name;
  std::string op_type;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<Attr> attrs;

  const Attr* find_attr(const std::string& attr_name) const {
    for (const auto& a : attrs) {
      if (a.name == attr_name) return &a;
    }
    return nullptr;
  }
};

Attr parse_attr(PbReader r) {
  Attr a;
  while (!r.done()) {
    auto [field, wt] = r.tag();
    switch (field) {
      case 1: a.name = r.string_field(); break;
      case 3: a.i = static_cast<std::int64_t>(r.varint()); break;
      case 8: read_repeated_int64(r, wt, a.ints); break;
      default: r.skip(wt); break;
    }
  }
  return a;
}

Node parse_node(PbReader r) {
  Node n;
  while (!r.done()) {
    auto [field, wt] = r.tag();
    switch (field) {
      case 1: n.inputs.push_back(r.string_field()); break;
      case 2: n.outputs.push_back(r.string_field()); break;
      case 3: n.name = r.string_field(); break;
      case 4: n.op_type = r.string_field(); break;
      case 5: n.attrs.push_back(parse_attr(r.submessage())); break;
      default: r.skip(wt); break;
    }
  }
  return n;
}

std::string parse_value_info_name(PbReader r) {
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1) return r.string_field();
    r.skip(wt);
  }
  return {};
}

struct Graph {
  std::vector<Node> nodes;
  std::map<std::string, TensorInit> initializers;
  std::vector<std::string> input_names;
};

Graph parse_graph(PbReader r) {
  Graph g;
  while (!r.done()) {
    auto [field, wt] = r.tag();
    switch (field) {
      case 1: g.nodes.push_back(parse_node(r.submessage())); break;
      case 5: {
        TensorInit t = parse_tensor(r.submessage());
        g.initializers[t.name] = std::move(t);
        break;
      }
      case 11: g.input_names.push_back(parse_value_info_name(r.submessage())); break;
      default: r.skip(wt); break;
    }
  }
  return g;
}

Graph parse_model(const std::vector<std::uint8_t>& bytes) {
  PbReader r(bytes.data(), bytes.size());
  std::optional<Graph> graph;
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 7 && wt == 2) {
      graph = parse_graph(r.submessage());
    } else {
      r.skip(wt);
    }
  }
  if (!graph) fail("no graph found");
  return std::move(*graph);
}

// ---- executable chain ----

struct ChainOp {
  enum class Kind { Conv, Relu, MaxPool };
  Kind kind = Kind::Relu;
  std::string layer_name;
  Conv2dWeights conv;  // Kind::Conv only
};

bool attr_ints_equal(const Attr* a, std::initializer_list<std::int64_t> expect) {
  if (!a) return false;
  return std::equal(a->ints.begin(), a->ints.end(), expect.begin(), expect.end()) &&
         a->ints.size() == expect.size();
}

bool attr_ints_all(const Attr* a, std::int64_t v) {
  if (!a) return false;
  return !a->ints.empty() &&
         std::all_of(a->ints.begin(), a->ints.end(), [v](std::int64_t x) { return x == v; });
}

Conv2dWeights build_conv(const Node& node, const Graph& g) {
  if (node.inputs.size() < 2) fail("Conv node is missing a weight input");
  auto wit = g.initializers.find(node.inputs[1]);
  if (wit == g.initializers.end()) fail("Conv weight \"" + node.inputs[1] + "\" is not an initializer");
  const TensorInit& w = wit->second;
  if (w.data_type != kFloatDataType) fail("Conv weights must be float32");
  if (w.dims.size() != 4 || w.dims[2] != 3 || w.dims[3] != 3) {
    fail("only 3x3 Conv kernels are supported");
  }

  const auto* kernel = node.find_attr("kernel_shape");
  if (kernel && !attr_ints_equal(kernel, {3, 3})) fail("only 3x3 Conv kernels are supported");
  const auto* strides = node.find_attr("strides");
  if (strides && !attr_ints_all(strides, 1)) fail("only stride-1 Conv is supported");
  const auto* dilations = node.find_attr("dilations");
  if (dilations && !attr_ints_all(dilations, 1)) fail("Conv dilations are not supported");
  const auto* group = node.find_attr("group");
  if (group && group->i != 1) fail("grouped Conv is not supported");
  const auto* pads = node.find_attr("pads");
  if (!attr_ints_equal(pads, {1, 1, 1, 1})) fail("Conv must use pads [1,1,1,1]");

  Conv2dWeights conv;
  conv.out_channels = static_cast<int>(w.dims[0]);
  conv.in_channels = static_cast<int>(w.dims[1]);
  if (w.values.size() != static_cast<std::size_t>(conv.out_channels) * conv.in_channels * 9) {
    fail("Conv weight data size does not match its dims");
  }
  conv.weights = w.values;
  conv.bias.assign(static_cast<std::size_t>(conv.out_channels), 0.0f);
  if (node.inputs.size() >= 3 && !node.inputs[2].empty()) {
    auto bit = g.initializers.find(node.inputs[2]);
    if (bit == g.initializers.end()) fail("Conv bias \"" + node.inputs[2] + "\" is not an initializer");
    if (bit->second.values.size() != conv.bias.size()) fail("Conv bias size mismatch");
    conv.bias = bit->second.values;
  }
  return conv;
}

void check_maxpool(const Node& node) {
  if (!attr_ints_equal(node.find_attr("kernel_shape"), {2, 2})) {
    fail("only 2x2 MaxPool is supported");
  }
  const auto* strides = node.find_attr("strides");
  if (!attr_ints_all(strides, 2)) fail("only stride-2 MaxPool is supported");
  const auto* pads = node.find_attr("pads");
  if (pads && !attr_ints_all(pads, 0)) fail("padded MaxPool is not supported");
  const auto* ceil_mode = node.find_attr("ceil_mode");
  if (ceil_mode && ceil_mode->i != 0) fail("MaxPool ceil_mode is not supported");
}

Tensor3 maxpool_forward(const Tensor3& in) {
  if (in.height() < 2 || in.width() < 2) fail("input too small for 2x2 MaxPool");
  const int oh = in.height() / 2;
  const int ow = in.width() / 2;
  Tensor3 out(in.channels(), oh, ow);
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        float best = in.at(c, 2 * y, 2 * x);
        best = std::max(best, in.at(c, 2 * y, 2 * x + 1));
        best = std::max(best, in.at(c, 2 * y + 1, 2 * x));
        best = std::max(best, in.at(c, 2 * y + 1, 2 * x + 1));
        out.at(c, y, x) = best;
      }
    }
  }
  return out;
}

// Routes each output gradient to the first-in-scan-order maximum of its
// window, matching the forward tie-break.
Tensor3 maxpool_backward(const Tensor3& grad_out, const Tensor3& in) {
  Tensor3 gin(in.channels(), in.height(), in.width());
  const int oh = grad_out.height();
  const int ow = grad_out.width();
  for (int c = 0; c < in.channels(); ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int by = 2 * y;
        int bx = 2 * x;
        float best = in.at(c, by, bx);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const float v = in.at(c, 2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        gin.at(c, by, bx) += grad_out.at(c, y, x);
      }
    }
  }
  return gin;
}

class PretrainedExtractor final : public FeatureExtractor {
 public:
  explicit PretrainedExtractor(const Graph& g) {
    std::string current;
    for (const auto& name : g.input_names) {
      if (!g.initializers.count(name)) {
        current = name;
        break;
      }
    }
    if (current.empty()) fail("graph has no data input");
    if (g.nodes.empty()) fail("graph has no nodes");

    for (const auto& node : g.nodes) {
      if (node.inputs.empty() || node.outputs.empty()) fail("node without inputs or outputs");
      if (node.inputs[0] != current) {
        fail("unsupported graph topology: expected a single chain, node \"" + node.op_type +
             "\" consumes \"" + node.inputs[0] + "\"");
      }
      ChainOp op;
      op.layer_name = node.name.empty() ? node.outputs[0] : node.name;
      if (node.op_type == "Conv") {
        op.kind = ChainOp::Kind::Conv;
        op.conv = build_conv(node, g);
      } else if (node.op_type == "Relu") {
        op.kind = ChainOp::Kind::Relu;
      } else if (node.op_type == "MaxPool") {
        op.kind = ChainOp::Kind::MaxPool;
        check_maxpool(node);
      } else {
        fail("unsupported op type \"" + node.op_type + "\"");
      }
      ops_.push_back(std::move(op));
      current = node.outputs[0];
    }
  }

  std::vector<std::string> layer_names() const override {
    std::vector<std::string> names;
    names.reserve(ops_.size());
    for (const auto& op : ops_) names.push_back(op.layer_name);
    return names;
  }

  FeatureSet extract(const Tensor3& img, std::span<const std::string> layers) const override {
    const int deepest = deepest_index(layers);
    std::vector<Tensor3> acts = forward(img, deepest);
    FeatureSet out;
    for (const auto& name : layers) {
      out.emplace(name, acts[static_cast<std::size_t>(layer_index(name))]);
    }
    return out;
  }

  Tensor3 backward(const Tensor3& img, const LayerGradients& grads) const override {
    std::vector<std::string> names;
    names.reserve(grads.size());
    for (const auto& [name, g] : grads) names.push_back(name);
    const int deepest = deepest_index(names);
    std::vector<Tensor3> acts = forward(img, deepest);

    Tensor3 current(acts[deepest].channels(), acts[deepest].height(), acts[deepest].width());
    for (int j = deepest; j >= 0; --j) {
      auto it = grads.find(ops_[j].layer_name);
      if (it != grads.end()) {
        if (!it->second.same_shape(acts[j])) {
          raise(ErrorCategory::ShapeMismatch,
                "gradient for layer \"" + ops_[j].layer_name + "\" has shape " +
                    it->second.shape_string() + ", expected " + acts[j].shape_string());
        }
        for (std::size_t i = 0; i < current.size(); ++i) {
          current.values()[i] = static_cast<float>(static_cast<double>(current.values()[i]) +
                                                   it->second.values()[i]);
        }
      }
      const Tensor3& input = j == 0 ? img : acts[j - 1];
      switch (ops_[j].kind) {
        case ChainOp::Kind::Conv:
          current = conv3x3_input_grad(current, ops_[j].conv, PadMode::Zero);
          break;
        case ChainOp::Kind::Relu:
          for (std::size_t i = 0; i < current.size(); ++i) {
            if (!(input.values()[i] > 0.0f)) current.values()[i] = 0.0f;
          }
          break;
        case ChainOp::Kind::MaxPool:
          current = maxpool_backward(current, input);
          break;
      }
    }
    return current;
  }

 private:
  int layer_index(const std::string& name) const {
    for (std::size_t j = 0; j < ops_.size(); ++j) {
      if (ops_[j].layer_name == name) return static_cast<int>(j);
    }
    raise(ErrorCategory::UnknownLayer, "model has no layer \"" + name + "\"");
  }

  int deepest_index(std::span<const std::string> layers) const {
    if (layers.empty()) {
      raise(ErrorCategory::InvalidArgument, "no layers requested");
    }
    int deepest = 0;
    for (const auto& name : layers) {
      deepest = std::max(deepest, layer_index(name));
    }
    return deepest;
  }

  // Activations for ops [0..upto] inclusive.
  std::vector<Tensor3> forward(const Tensor3& img, int upto) const {
    std::vector<Tensor3> acts;
    acts.reserve(static_cast<std::size_t>(upto) + 1);
    const Tensor3* current = &img;
    for (int j = 0; j <= upto; ++j) {
      switch (ops_[j].kind) {
        case ChainOp::Kind::Conv:
          acts.push_back(conv3x3(*current, ops_[j].conv, PadMode::Zero));
          break;
        case ChainOp::Kind::Relu: {
          Tensor3 r(current->channels(), current->height(), current->width());
          for (std::size_t i = 0; i < r.size(); ++i) {
            r.values()[i] = std::max(current->values()[i], 0.0f);
          }
          acts.push_back(std::move(r));
          break;
        }
        case ChainOp::Kind::MaxPool:
          acts.push_back(maxpool_forward(*current));
          break;
      }
      current = &acts.back();
    }
    return acts;
  }

  std::vector<ChainOp> ops_;
};

}  // namespace

std::unique_ptr<FeatureExtractor> make_pretrained_extractor(const std::filesystem::path& model_path) {
  if (model_path.empty()) {
    raise(ErrorCategory::BackendUnavailable,
          "pretrained backend selected but no pretrained_model path is configured");
  }
  if (!std::filesystem::exists(model_path)) {
    raise(ErrorCategory::BackendUnavailable,
          "pretrained model file not found: " + model_path.string());
  }
  std::vector<std::uint8_t> bytes = read_file_bytes(model_path);
  return std::make_unique<PretrainedExtractor>(parse_model(bytes));
}

}  // namespace depthstyle
