#include "otlab/nets.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include <json.hpp>

#include "otlab/errors.hpp"

namespace otlab {

Mlp::Mlp(std::vector<std::size_t> dims, double leaky_slope, std::uint64_t init_seed, MapHead head)
    : dims_(std::move(dims)), slope_(leaky_slope), seed_(init_seed), head_(head)
{
    if (dims_.size() < 2)
        throw ConfigError("an MLP needs at least input and output dims");
    for (auto d : dims_)
        if (d == 0)
            throw ConfigError("MLP layer dims must be positive");
    if (head_.kind == MapHead::Kind::identity && dims_.front() != dims_.back())
        throw ConfigError("identity skip needs equal input and output dims");
    if (head_.kind == MapHead::Kind::upsample && dims_.front() * head_.up.factor() != dims_.back())
        throw ConfigError("upsample skip needs output dim = input dim * factor");

    std::mt19937_64 rng(init_seed);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        std::size_t in = dims_[l], out = dims_[l + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Tensor w({in, out});
        for (auto& v : w.data())
            v = dist(rng);
        std::string idx = std::to_string(l);
        layers_.push_back({Parameter("layer" + idx + ".weight", std::move(w)),
                           Parameter("layer" + idx + ".bias", Tensor({1, out}))});
    }
}

Mlp mlp_new(std::vector<std::size_t> dims, double leaky_slope, std::uint64_t init_seed, MapHead head)
{
    return Mlp(std::move(dims), leaky_slope, init_seed, head);
}

std::size_t Mlp::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers_)
        n += l.weight.value.size() + l.bias.value.size();
    return n;
}

std::vector<Parameter*> Mlp::parameters()
{
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

Tensor Mlp::apply(const Tensor& x) const
{
    if (x.cols() != input_dim())
        throw DimensionError("network expects input dim " + std::to_string(input_dim()) + ", got " +
                             std::to_string(x.cols()));
    Tensor h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Tensor z({h.rows(), layers_[l].weight.value.cols()});
        auto zm = as_matrix(z);
        zm.noalias() = as_matrix(h) * as_matrix(layers_[l].weight.value);
        zm.rowwise() += as_matrix(layers_[l].bias.value).row(0);
        if (l + 1 < layers_.size())
            for (auto& v : z.data())
                v = v > 0 ? v : slope_ * v;
        h = std::move(z);
    }
    if (head_.kind == MapHead::Kind::identity)
        h = h + x;
    else if (head_.kind == MapHead::Kind::upsample)
        h = h + head_.up.apply(x);
    h.require_finite("network forward");
    return h;
}

template <bool Tracked>
Var Mlp::forward_impl(Tape& tape, const Var& x)
{
    if (x.value().cols() != input_dim())
        throw DimensionError("network expects input dim " + std::to_string(input_dim()) + ", got " +
                             std::to_string(x.value().cols()));
    Var h = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Var w, b;
        if constexpr (Tracked) {
            w = tape.parameter(layers_[l].weight);
            b = tape.parameter(layers_[l].bias);
        } else {
            w = tape.constant(layers_[l].weight.value);
            b = tape.constant(layers_[l].bias.value);
        }
        h = add_row(matmul(h, w), b);
        if (l + 1 < layers_.size())
            h = leaky_relu(h, slope_);
    }
    if (head_.kind == MapHead::Kind::identity)
        h = add(h, x);
    else if (head_.kind == MapHead::Kind::upsample)
        h = add(h, matmul(x, tape.constant(head_.up.matrix(input_dim()))));
    return h;
}

Var Mlp::forward(Tape& tape, const Var& x) { return forward_impl<true>(tape, x); }

Var Mlp::forward_frozen(Tape& tape, const Var& x) const
{
    return const_cast<Mlp*>(this)->forward_impl<false>(tape, x);
}

Var Mlp::input_gradient(Tape& tape, const Tensor& x)
{
    if (output_dim() != 1 || head_.kind != MapHead::Kind::none)
        throw ContractError("input_gradient needs a scalar-output network without skip");
    if (x.cols() != input_dim())
        throw DimensionError("input_gradient: input dim mismatch");

    // Slopes of the activation at every hidden pre-activation.
    std::vector<Tensor> masks;
    Tensor h = x;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        Tensor z = add_row(matmul(h, layers_[l].weight.value), layers_[l].bias.value);
        Tensor mask(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i) {
            mask[i] = z[i] > 0 ? 1.0 : slope_;
            z[i] = z[i] > 0 ? z[i] : slope_ * z[i];
        }
        masks.push_back(std::move(mask));
        h = std::move(z);
    }

    Var delta = tape.constant(Tensor::ones(x.rows(), 1));
    for (std::size_t l = layers_.size(); l-- > 0;) {
        Var w = tape.parameter(layers_[l].weight);
        delta = matmul(delta, transpose(w));
        if (l > 0)
            delta = mul(delta, tape.constant(masks[l - 1]));
    }
    return delta;
}

void Mlp::zero_output_layer()
{
    auto& last = layers_.back();
    last.weight.value = Tensor(last.weight.value.shape());
    last.bias.value = Tensor(last.bias.value.shape());
}

void Mlp::zero_grad()
{
    for (auto* p : parameters())
        p->zero_grad();
}

FrozenMap FrozenMap::from_upsampler(std::size_t input_dim, Upsampler up)
{
    Mlp net({input_dim, input_dim * up.factor()}, 0.2, 0, MapHead::upsample(up));
    net.zero_output_layer();
    return FrozenMap(net);
}

FrozenMap FrozenMap::identity(std::size_t dim)
{
    Mlp net({dim, dim}, 0.2, 0, MapHead::identity());
    net.zero_output_layer();
    return FrozenMap(net);
}

namespace {

using nlohmann::json;

const char* head_name(MapHead::Kind k)
{
    switch (k) {
    case MapHead::Kind::identity: return "identity";
    case MapHead::Kind::upsample: return "upsample";
    default: return "none";
    }
}

void write_f64(std::ostream& out, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i)
        bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64(std::istream& in)
{
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in)
        throw ConfigError("checkpoint weight blob is truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const Mlp& net, std::ostream& out)
{
    json header;
    header["dims"] = net.dims();
    header["activation"] = {{"kind", "leaky_relu"}, {"alpha", net.leaky_slope()}};
    header["seed"] = net.init_seed();
    header["head"] = {{"kind", head_name(net.head().kind)},
                      {"upsampler", net.head().up.kind() == Upsampler::Kind::linear ? "linear" : "nearest"},
                      {"factor", net.head().up.factor()}};
    header["param_count"] = net.parameter_count();
    out << header.dump() << '\n';
    for (const auto& l : net.layers()) {
        for (double v : l.weight.value.data())
            write_f64(out, v);
        for (double v : l.bias.value.data())
            write_f64(out, v);
    }
}

Mlp load_checkpoint(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError("checkpoint has no header");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint header is not JSON: ") + e.what());
    }
    auto dims = header.at("dims").get<std::vector<std::size_t>>();
    double alpha = header.at("activation").at("alpha").get<double>();
    auto seed = header.at("seed").get<std::uint64_t>();
    const auto& h = header.at("head");
    std::string kind = h.at("kind").get<std::string>();
    Upsampler up(h.at("upsampler").get<std::string>() == "linear" ? Upsampler::Kind::linear
                                                                  : Upsampler::Kind::nearest,
                 h.at("factor").get<std::size_t>());
    MapHead head;
    if (kind == "identity")
        head = MapHead::identity();
    else if (kind == "upsample")
        head = MapHead::upsample(up);
    else if (kind != "none")
        throw ConfigError("unknown checkpoint head kind " + kind);

    Mlp net(dims, alpha, seed, head);
    if (net.parameter_count() != header.at("param_count").get<std::size_t>())
        throw ConfigError("checkpoint parameter count does not match its dims");
    for (auto& l : net.layers()) {
        for (auto& v : l.weight.value.data())
            v = read_f64(in);
        for (auto& v : l.bias.value.data())
            v = read_f64(in);
    }
    return net;
}

}  // namespace otlab
