#include "sngp/artifact.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "sngp/errors.hpp"

namespace sngp {

using nlohmann::json;

namespace {

std::uint64_t to_little_endian(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(x);
    return x;
}

}  // namespace

std::string encode_f64(std::span<const double> values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint64_t le = to_little_endian(std::bit_cast<std::uint64_t>(values[i]));
        std::memcpy(bytes.data() + 8 * i, &le, 8);
    }
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Vector decode_f64(const std::string& text) {
    if (text.size() % 4 != 0) throw ConfigError("artifact: malformed base64 payload");
    std::vector<unsigned char> bytes(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw ConfigError("artifact: malformed base64 payload");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t len = static_cast<std::size_t>(n);
    if (!text.empty() && text.back() == '=') --len;
    if (text.size() >= 2 && text[text.size() - 2] == '=') --len;
    if (len % 8 != 0) throw ConfigError("artifact: payload length is not a multiple of 8 bytes");
    Vector out(len / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t le = 0;
        std::memcpy(&le, bytes.data() + 8 * i, 8);
        out[i] = std::bit_cast<double>(to_little_endian(le));
    }
    return out;
}

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_f64(m.data())}};
}

Matrix matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
    Vector data = decode_f64(j.at("data").get<std::string>());
    if (data.size() != rows * cols) throw ConfigError("artifact: matrix payload size does not match its shape");
    return Matrix(rows, cols, std::move(data));
}

namespace {

json vector_to_json(std::span<const double> v) { return encode_f64(v); }
Vector vector_from_json(const json& j) { return decode_f64(j.get<std::string>()); }

json shape_to_json(const NetworkShape& s) {
    json j{{"input_dim", s.input_dim},
           {"hidden_dim", s.hidden_dim},
           {"num_blocks", s.num_blocks},
           {"input_projection", s.input_projection},
           {"activation", s.activation == Activation::relu ? "relu" : "identity"},
           {"dropout_rate", s.dropout_rate},
           {"power_iterations", s.power_iterations},
           {"block_init_scale", s.block_init_scale}};
    j["spec_norm_bound"] = s.spec_norm_bound ? json(*s.spec_norm_bound) : json(nullptr);
    return j;
}

NetworkShape shape_from_json(const json& j) {
    NetworkShape s;
    s.input_dim = j.at("input_dim").get<std::size_t>();
    s.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    s.num_blocks = j.at("num_blocks").get<std::size_t>();
    s.input_projection = j.at("input_projection").get<bool>();
    s.activation = j.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::identity;
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.power_iterations = j.at("power_iterations").get<std::size_t>();
    s.block_init_scale = j.at("block_init_scale").get<double>();
    if (!j.at("spec_norm_bound").is_null()) s.spec_norm_bound = j.at("spec_norm_bound").get<double>();
    return s;
}

json network_to_json(const ResidualNetwork& net) {
    json j{{"shape", shape_to_json(net.shape())}};
    if (net.input_proj())
        j["input_proj"] = {{"weight", matrix_to_json(net.input_proj()->weight)},
                           {"bias", vector_to_json(net.input_proj()->bias)}};
    j["blocks"] = json::array();
    for (const auto& b : net.blocks()) {
        json jb{{"weight", matrix_to_json(b.weight)}, {"bias", vector_to_json(b.bias)}};
        if (b.constraint)
            jb["constraint"] = {{"bound", b.constraint->bound},
                                {"power_iters", b.constraint->power_iters},
                                {"u", vector_to_json(b.constraint->u)},
                                {"v", vector_to_json(b.constraint->v)},
                                {"last_estimate", b.constraint->last_estimate}};
        j["blocks"].push_back(std::move(jb));
    }
    return j;
}

ResidualNetwork network_from_json(const json& j) {
    ResidualNetwork net(shape_from_json(j.at("shape")), 0);
    if (net.input_proj()) {
        net.input_proj()->weight = matrix_from_json(j.at("input_proj").at("weight"));
        net.input_proj()->bias = vector_from_json(j.at("input_proj").at("bias"));
    }
    const auto& blocks = j.at("blocks");
    if (blocks.size() != net.blocks().size()) throw ConfigError("artifact: block count does not match shape");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        auto& b = net.blocks()[l];
        b.weight = matrix_from_json(blocks[l].at("weight"));
        b.bias = vector_from_json(blocks[l].at("bias"));
        if (blocks[l].contains("constraint")) {
            const auto& c = blocks[l]["constraint"];
            b.constraint = SpectralConstraint{c.at("bound").get<double>(), c.at("power_iters").get<std::size_t>(),
                                              vector_from_json(c.at("u")), vector_from_json(c.at("v")),
                                              c.at("last_estimate").get<double>()};
        } else {
            b.constraint.reset();
        }
    }
    return net;
}

json gp_options_to_json(const RffGpOptions& o) {
    return json{{"input_dim", o.input_dim},
                {"num_features", o.num_features},
                {"num_outputs", o.num_outputs},
                {"amplitude", o.amplitude},
                {"length_scale", o.length_scale},
                {"prior_variance", o.prior_variance},
                {"seed", o.seed},
                {"precision_mode", o.precision_mode.kind == PrecisionUpdateMode::Kind::exact ? "exact"
                                                                                               : "moving_average"},
                {"ridge", o.precision_mode.ridge},
                {"discount", o.precision_mode.discount},
                {"input_projection_dim", o.input_projection_dim},
                {"input_layer_norm", o.input_layer_norm}};
}

RffGpOptions gp_options_from_json(const json& j) {
    RffGpOptions o;
    o.input_dim = j.at("input_dim").get<std::size_t>();
    o.num_features = j.at("num_features").get<std::size_t>();
    o.num_outputs = j.at("num_outputs").get<std::size_t>();
    o.amplitude = j.at("amplitude").get<double>();
    o.length_scale = j.at("length_scale").get<double>();
    o.prior_variance = j.at("prior_variance").get<double>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.precision_mode.kind = j.at("precision_mode").get<std::string>() == "exact"
                                ? PrecisionUpdateMode::Kind::exact
                                : PrecisionUpdateMode::Kind::moving_average;
    o.precision_mode.ridge = j.at("ridge").get<double>();
    o.precision_mode.discount = j.at("discount").get<double>();
    o.input_projection_dim = j.at("input_projection_dim").get<std::size_t>();
    o.input_layer_norm = j.at("input_layer_norm").get<bool>();
    return o;
}

}  // namespace

json model_to_json(const Model& model) {
    json j{{"likelihood", to_string(model.likelihood)},
           {"num_classes", model.num_classes},
           {"network", network_to_json(model.net)}};
    if (model.has_gp_head()) {
        const auto& h = model.gp_head();
        j["head"] = {{"type", "gp"},
                     {"options", gp_options_to_json(h.options())},
                     {"beta", matrix_to_json(h.beta())},
                     {"precision", matrix_to_json(h.precision())},
                     {"covariance", h.covariance() ? matrix_to_json(*h.covariance()) : json(nullptr)},
                     {"calibrated_amplitude", h.calibrated_amplitude()}};
    } else {
        const auto& h = std::get<DenseHead>(model.head);
        j["head"] = {{"type", "dense"}, {"weight", matrix_to_json(h.weight)}, {"bias", vector_to_json(h.bias)}};
    }
    j["input_norm"] = model.input_norm ? json{{"mean", vector_to_json(model.input_norm->mean)},
                                              {"std", vector_to_json(model.input_norm->std)}}
                                       : json(nullptr);
    return j;
}

Model model_from_json(const json& j) {
    Model m;
    m.likelihood = likelihood_from_string(j.at("likelihood").get<std::string>());
    m.num_classes = j.at("num_classes").get<std::size_t>();
    m.net = network_from_json(j.at("network"));
    const auto& h = j.at("head");
    if (h.at("type").get<std::string>() == "gp") {
        RffGpHead head(gp_options_from_json(h.at("options")));
        std::optional<Matrix> cov;
        if (!h.at("covariance").is_null()) cov = matrix_from_json(h.at("covariance"));
        head.restore(matrix_from_json(h.at("beta")), matrix_from_json(h.at("precision")), std::move(cov),
                     h.at("calibrated_amplitude").get<double>());
        m.head = std::move(head);
    } else {
        m.head = DenseHead{matrix_from_json(h.at("weight")), vector_from_json(h.at("bias"))};
    }
    if (!j.at("input_norm").is_null())
        m.input_norm = NormStats{vector_from_json(j["input_norm"].at("mean")), vector_from_json(j["input_norm"].at("std"))};
    return m;
}

json artifact_to_json(const ModelArtifact& artifact) {
    json j{{"format_version", artifact.format_version}, {"config", config_to_json(artifact.config)}};
    j["members"] = json::array();
    for (const auto& m : artifact.members) j["members"].push_back(model_to_json(m));
    return j;
}

ModelArtifact artifact_from_json(const json& j) {
    const int version = j.at("format_version").get<int>();
    if (version != kArtifactVersion)
        throw ArtifactVersionMismatch("artifact format version " + std::to_string(version) + ", expected " +
                                      std::to_string(kArtifactVersion));
    ModelArtifact a;
    a.config = config_from_json(j.at("config"));
    for (const auto& m : j.at("members")) a.members.push_back(model_from_json(m));
    if (a.members.empty()) throw EmptyEnsemble("artifact has no members");
    return a;
}

std::string serialize_artifact(const ModelArtifact& artifact) { return artifact_to_json(artifact).dump(1) + "\n"; }

void save_artifact(const std::string& path, const ModelArtifact& artifact) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write artifact: " + path);
    out << serialize_artifact(artifact);
}

ModelArtifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open artifact: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("artifact is not valid JSON: " + std::string(e.what()));
    }
    try {
        return artifact_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("artifact is missing fields: " + std::string(e.what()));
    }
}

}  // namespace sngp
