#include "qac/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace qac {

namespace {

constexpr char kSingleLayerMagic[] = "QACLM1";  // 6 chars + NUL = 7 bytes on disk
constexpr char kMultiLayerMagic[] = "QACLM2";
constexpr std::size_t kModelMagicSize = 7;
constexpr std::size_t kMaxDim = 4096;
constexpr std::size_t kMaxLayers = 64;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void write_block(std::ostream& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) detail::write_f64(out, data[i]);
}

void read_block(std::istream& in, double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) data[i] = detail::read_f64(in);
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t vocab_size, std::size_t dim, std::size_t num_layers) {
    if (vocab_size == 0 || dim == 0 || num_layers == 0) {
        throw std::invalid_argument("model dimensions must be positive");
    }
    ModelParams params;
    params.vocab_size = vocab_size;
    params.dim = dim;
    params.embedding.assign(vocab_size * dim, 0.0);
    params.layers.resize(num_layers);
    for (auto& layer : params.layers) {
        layer.input_weights.assign(4 * dim * dim, 0.0);
        layer.recurrent_weights.assign(4 * dim * dim, 0.0);
        layer.bias.assign(4 * dim, 0.0);
    }
    params.emb_weights.assign(dim, 0.0);
    return params;
}

void ModelParams::check_shapes() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model shape mismatch: " + what); };
    if (vocab_size == 0 || dim == 0) fail("empty dimensions");
    if (layers.empty()) fail("no LSTM layers");
    if (embedding.size() != vocab_size * dim) fail("embedding");
    for (const auto& layer : layers) {
        if (layer.input_weights.size() != 4 * dim * dim) fail("input weights");
        if (layer.recurrent_weights.size() != 4 * dim * dim) fail("recurrent weights");
        if (layer.bias.size() != 4 * dim) fail("bias");
    }
    if (emb_weights.size() != dim) fail("emb_weights");
}

bool ModelParams::all_finite() const {
    bool finite = true;
    for_each_block(*this, [&](std::string_view, std::span<const double> block, bool) {
        for (double v : block) finite = finite && std::isfinite(v);
    });
    return finite;
}

void ModelParams::set_zero() {
    for_each_block(*this, [](std::string_view, std::span<double> block, bool) {
        std::fill(block.begin(), block.end(), 0.0);
    });
}

void LanguageModel::save(std::ostream& out) const {
    params.check_shapes();
    if (vocab.size() != params.vocab_size) throw std::invalid_argument("vocabulary/model size mismatch");
    const std::size_t d = params.dim;
    bool single = params.layers.size() == 1;
    out.write(single ? kSingleLayerMagic : kMultiLayerMagic, kModelMagicSize);
    detail::write_u64(out, params.vocab_size);
    detail::write_u64(out, d);
    if (!single) detail::write_u64(out, params.layers.size());
    for (const auto& token : vocab.tokens()) detail::write_string(out, token);
    write_block(out, params.embedding.data(), params.embedding.size());
    for (const auto& layer : params.layers) {
        for (std::size_t gate = 0; gate < 4; ++gate) {
            write_block(out, layer.input_weights.data() + gate * d * d, d * d);
            write_block(out, layer.recurrent_weights.data() + gate * d * d, d * d);
            write_block(out, layer.bias.data() + gate * d, d);
        }
    }
    detail::write_f64(out, params.normalizer);
    write_block(out, params.emb_weights.data(), d);
    if (!out) throw std::runtime_error("failed writing model");
}

void LanguageModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save(out);
}

LanguageModel LanguageModel::load(std::istream& in) {
    char magic[kModelMagicSize] = {};
    detail::read_exact(in, magic, kModelMagicSize);
    bool single = std::memcmp(magic, kSingleLayerMagic, kModelMagicSize) == 0;
    if (!single && std::memcmp(magic, kMultiLayerMagic, kModelMagicSize) != 0) {
        throw std::runtime_error("bad magic bytes");
    }
    std::uint64_t n = detail::read_u64(in);
    std::uint64_t d = detail::read_u64(in);
    std::uint64_t num_layers = single ? 1 : detail::read_u64(in);
    if (n < Vocabulary::kSpecialCount || n > (1u << 24) || d == 0 || d > kMaxDim || num_layers == 0 ||
        num_layers > kMaxLayers) {
        throw std::runtime_error("model header out of range");
    }

    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) tokens.push_back(detail::read_string(in));

    LanguageModel model;
    try {
        model.vocab = Vocabulary::from_tokens(std::move(tokens));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("corrupt model vocabulary: ") + e.what());
    }
    model.params = ModelParams::zeros(n, d, num_layers);
    auto& p = model.params;
    read_block(in, p.embedding.data(), p.embedding.size());
    for (auto& layer : p.layers) {
        for (std::size_t gate = 0; gate < 4; ++gate) {
            read_block(in, layer.input_weights.data() + gate * d * d, d * d);
            read_block(in, layer.recurrent_weights.data() + gate * d * d, d * d);
            read_block(in, layer.bias.data() + gate * d, d);
        }
    }
    p.normalizer = detail::read_f64(in);
    read_block(in, p.emb_weights.data(), d);
    if (!p.all_finite()) throw std::runtime_error("model contains non-finite values");
    return model;
}

LanguageModel LanguageModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load(in);
}

void lstm_step(const LstmLayer& layer, std::size_t dim, std::span<const double> x,
               std::span<const double> h, std::span<const double> c, std::span<double> h_out,
               std::span<double> c_out, std::span<double> gates) {
    const std::size_t rows = 4 * dim;
    double local[4 * 512];
    std::vector<double> heap;
    double* pre = local;
    if (!gates.empty()) {
        pre = gates.data();
    } else if (rows > std::size(local)) {
        heap.resize(rows);
        pre = heap.data();
    }

    const double* wx = layer.input_weights.data();
    const double* wh = layer.recurrent_weights.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wx_row = wx + r * dim;
        const double* wh_row = wh + r * dim;
        double acc = layer.bias[r];
        for (std::size_t j = 0; j < dim; ++j) acc += wx_row[j] * x[j] + wh_row[j] * h[j];
        pre[r] = acc;
    }
    for (std::size_t j = 0; j < dim; ++j) {
        double i = sigmoid(pre[j]);
        double f = sigmoid(pre[dim + j]);
        double o = sigmoid(pre[2 * dim + j]);
        double g = std::tanh(pre[3 * dim + j]);
        double cell = f * c[j] + i * g;
        c_out[j] = cell;
        h_out[j] = o * std::tanh(cell);
        pre[j] = i;
        pre[dim + j] = f;
        pre[2 * dim + j] = o;
        pre[3 * dim + j] = g;
    }
}

}  // namespace qac
