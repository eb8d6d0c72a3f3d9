#include "cosimo/errors.hpp"
#include "cosimo/nn.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace cosimo {

using nlohmann::json;

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

void read_matrix(const json& j, Eigen::MatrixXd& m, const std::string& where) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows != m.rows() || cols != m.cols() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ConfigError({where + ": expected a " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                           " matrix"});
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[static_cast<std::size_t>(i * cols + c)];
}

json matrices_json(const std::vector<Eigen::MatrixXd>& ms) {
    json out = json::array();
    for (const auto& m : ms) out.push_back(matrix_json(m));
    return out;
}

void read_matrices(const json& j, std::vector<Eigen::MatrixXd>& ms, const std::string& where) {
    if (!j.is_array() || j.size() != ms.size()) throw ConfigError({where + ": wrong number of coefficient matrices"});
    for (std::size_t i = 0; i < ms.size(); ++i) read_matrix(j[i], ms[i], where + "/" + std::to_string(i));
}

}  // namespace

std::string checkpoint_to_json(const Network& net, const TruncationConfig& truncation, std::uint64_t complex_checksum) {
    const auto& c = net.config();
    json j;
    j["format"] = "cosimo-checkpoint";
    j["version"] = 1;
    j["config"] = {{"family", to_string(c.family)},
                   {"dims", c.dims},
                   {"branches", c.branches},
                   {"aggregation", to_string(c.aggregation)},
                   {"nonlinearity", to_string(c.sigma.kind)},
                   {"slope", c.sigma.slope},
                   {"share_t", c.share_t},
                   {"init_t", c.init_t},
                   {"discrete_order", c.discrete_order},
                   {"discrete_zero_order", c.discrete_zero_order},
                   {"out_level", c.out_level}};
    j["truncation"] = {{"policy", to_string(truncation.policy)},
                       {"k_lower", truncation.k_lower},
                       {"k_upper", truncation.k_upper}};
    j["complex_checksum"] = complex_checksum;
    json layers = json::array();
    for (const auto& layer : net.params()) {
        json levels = json::array();
        for (const auto& level : layer) {
            json lj;
            json branches = json::array();
            for (const auto& p : level.branches)
                branches.push_back({{"theta_d", matrix_json(p.theta_d)},
                                    {"theta_u", matrix_json(p.theta_u)},
                                    {"psi_d", matrix_json(p.psi_d)},
                                    {"psi_u", matrix_json(p.psi_u)},
                                    {"tau_d", p.tau_d},
                                    {"tau_u", p.tau_u}});
            for (const auto& p : level.discrete)
                branches.push_back({{"theta_d", matrices_json(p.theta_d)},
                                    {"theta_u", matrices_json(p.theta_u)},
                                    {"psi_d", matrices_json(p.psi_d)},
                                    {"psi_u", matrices_json(p.psi_u)}});
            lj["branches"] = branches;
            if (level.mlp) lj["mlp"] = {{"weight", matrix_json(level.mlp->weight)}, {"bias", matrix_json(level.mlp->bias)}};
            levels.push_back(lj);
        }
        layers.push_back({{"levels", levels}});
    }
    j["layers"] = layers;
    return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("checkpoint: ") + e.what()});
    }
    try {
        if (j.value("format", "") != "cosimo-checkpoint") throw ConfigError({"/format: not a cosimo checkpoint"});
        const auto& cj = j.at("config");
        NetworkConfig config;
        config.family = parse_model_family(cj.at("family").get<std::string>());
        config.dims = cj.at("dims").get<std::vector<int>>();
        config.branches = cj.at("branches").get<int>();
        config.aggregation = parse_aggregation(cj.at("aggregation").get<std::string>());
        config.sigma.kind = parse_activation(cj.at("nonlinearity").get<std::string>());
        config.sigma.slope = cj.at("slope").get<double>();
        config.share_t = cj.at("share_t").get<bool>();
        config.init_t = cj.at("init_t").get<double>();
        config.discrete_order = cj.at("discrete_order").get<int>();
        config.discrete_zero_order = cj.at("discrete_zero_order").get<bool>();
        config.out_level = cj.at("out_level").get<int>();

        Checkpoint out;
        out.network = Network(config, 0);
        const auto& tj = j.at("truncation");
        out.truncation.policy = parse_truncation_policy(tj.at("policy").get<std::string>());
        out.truncation.k_lower = tj.at("k_lower").get<std::array<int, 3>>();
        out.truncation.k_upper = tj.at("k_upper").get<std::array<int, 3>>();
        out.complex_checksum = j.at("complex_checksum").get<std::uint64_t>();

        const auto& lj = j.at("layers");
        auto& layers = out.network.params();
        if (!lj.is_array() || lj.size() != layers.size()) throw ConfigError({"/layers: wrong layer count"});
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& levels = lj[l].at("levels");
            for (std::size_t k = 0; k < 3; ++k) {
                auto& level = layers[l][k];
                const std::string where = "/layers/" + std::to_string(l) + "/levels/" + std::to_string(k);
                const auto& bj = levels.at(k).at("branches");
                const std::size_t count = level.branches.size() + level.discrete.size();
                if (bj.size() != count) throw ConfigError({where + "/branches: wrong branch count"});
                for (std::size_t m = 0; m < level.branches.size(); ++m) {
                    auto& p = level.branches[m];
                    const std::string w = where + "/branches/" + std::to_string(m);
                    read_matrix(bj[m].at("theta_d"), p.theta_d, w + "/theta_d");
                    read_matrix(bj[m].at("theta_u"), p.theta_u, w + "/theta_u");
                    read_matrix(bj[m].at("psi_d"), p.psi_d, w + "/psi_d");
                    read_matrix(bj[m].at("psi_u"), p.psi_u, w + "/psi_u");
                    p.tau_d = bj[m].at("tau_d").get<double>();
                    p.tau_u = bj[m].at("tau_u").get<double>();
                }
                for (std::size_t m = 0; m < level.discrete.size(); ++m) {
                    auto& p = level.discrete[m];
                    const std::string w = where + "/branches/" + std::to_string(m);
                    read_matrices(bj[m].at("theta_d"), p.theta_d, w + "/theta_d");
                    read_matrices(bj[m].at("theta_u"), p.theta_u, w + "/theta_u");
                    read_matrices(bj[m].at("psi_d"), p.psi_d, w + "/psi_d");
                    read_matrices(bj[m].at("psi_u"), p.psi_u, w + "/psi_u");
                }
                if (level.mlp) {
                    const auto& mj = levels.at(k).at("mlp");
                    read_matrix(mj.at("weight"), level.mlp->weight, where + "/mlp/weight");
                    Eigen::MatrixXd bias(1, level.mlp->bias.size());
                    read_matrix(mj.at("bias"), bias, where + "/mlp/bias");
                    level.mlp->bias = bias.row(0);
                }
            }
        }
        return out;
    } catch (const json::exception& e) {
        throw ConfigError({std::string("checkpoint: ") + e.what()});
    } catch (const DomainError& e) {
        throw ConfigError({std::string("checkpoint: ") + e.what()});
    }
}

void save_checkpoint(const Network& net, const TruncationConfig& truncation, std::uint64_t complex_checksum,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << checkpoint_to_json(net, truncation, complex_checksum);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

}  // namespace cosimo
