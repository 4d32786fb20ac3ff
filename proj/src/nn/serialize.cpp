#include "nn/serialize.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace nn {

namespace {

using nlohmann::json;

json dump_config(const TransformerConfig& cfg) {
    json j;
    j["n_layers"] = cfg.n_layers;
    j["n_heads"] = cfg.n_heads;
    j["head_dim"] = cfg.head_dim;
    j["model_dim"] = cfg.model_dim;
    j["vocab_size"] = cfg.vocab_size;
    j["context_len"] = cfg.context_len;
    j["use_layer_norm"] = cfg.use_layer_norm;
    j["use_positional"] = cfg.use_positional;
    j["bidirectional"] = cfg.bidirectional;
    return j;
}

TransformerConfig parse_config(const json& j) {
    TransformerConfig cfg;
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.n_heads = j.at("n_heads").get<int>();
    cfg.head_dim = j.at("head_dim").get<int>();
    cfg.model_dim = j.at("model_dim").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.context_len = j.at("context_len").get<int>();
    cfg.use_layer_norm = j.at("use_layer_norm").get<bool>();
    cfg.use_positional = j.at("use_positional").get<bool>();
    cfg.bidirectional = j.at("bidirectional").get<std::vector<uint8_t>>();
    return cfg;
}

} // namespace

std::string model_to_json(const TransformerModel& model) {
    model.validate();
    json j;
    j["format"] = "countlab-model-v1";
    j["config"] = dump_config(model.config);
    j["token_embeddings"] = model.token_embeddings;
    j["positional_embeddings"] = model.positional_embeddings;
    j["readout"] = model.readout;
    json layers = json::array();
    for (const auto& layer : model.layers) {
        json jl;
        json heads = json::array();
        for (const auto& head : layer.heads)
            heads.push_back(json{{"wq", head.wq}, {"wk", head.wk}, {"wv", head.wv}});
        jl["heads"] = std::move(heads);
        jl["mlp"] = json{{"hidden_dim", layer.mlp.hidden_dim},
                         {"w1", layer.mlp.w1},
                         {"b1", layer.mlp.b1},
                         {"w2", layer.mlp.w2},
                         {"b2", layer.mlp.b2}};
        if (model.config.use_layer_norm) {
            jl["ln1_gain"] = layer.ln1_gain;
            jl["ln1_bias"] = layer.ln1_bias;
            jl["ln2_gain"] = layer.ln2_gain;
            jl["ln2_bias"] = layer.ln2_bias;
        }
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    if (model.config.use_layer_norm) {
        j["final_ln_gain"] = model.final_ln_gain;
        j["final_ln_bias"] = model.final_ln_bias;
    }
    return j.dump();
}

TransformerModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model_from_json: parse error: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "countlab-model-v1")
            throw std::invalid_argument("model_from_json: unknown format tag");
        TransformerModel model;
        model.config = parse_config(j.at("config"));
        model.token_embeddings = j.at("token_embeddings").get<std::vector<double>>();
        model.positional_embeddings = j.at("positional_embeddings").get<std::vector<double>>();
        model.readout = j.at("readout").get<std::vector<double>>();
        for (const auto& jl : j.at("layers")) {
            TransformerLayer layer;
            for (const auto& jh : jl.at("heads")) {
                AttentionHead head;
                head.wq = jh.at("wq").get<std::vector<double>>();
                head.wk = jh.at("wk").get<std::vector<double>>();
                head.wv = jh.at("wv").get<std::vector<double>>();
                layer.heads.push_back(std::move(head));
            }
            const auto& jm = jl.at("mlp");
            layer.mlp.hidden_dim = jm.at("hidden_dim").get<int>();
            layer.mlp.w1 = jm.at("w1").get<std::vector<double>>();
            layer.mlp.b1 = jm.at("b1").get<std::vector<double>>();
            layer.mlp.w2 = jm.at("w2").get<std::vector<double>>();
            layer.mlp.b2 = jm.at("b2").get<std::vector<double>>();
            if (model.config.use_layer_norm) {
                layer.ln1_gain = jl.at("ln1_gain").get<std::vector<double>>();
                layer.ln1_bias = jl.at("ln1_bias").get<std::vector<double>>();
                layer.ln2_gain = jl.at("ln2_gain").get<std::vector<double>>();
                layer.ln2_bias = jl.at("ln2_bias").get<std::vector<double>>();
            }
            model.layers.push_back(std::move(layer));
        }
        if (model.config.use_layer_norm) {
            model.final_ln_gain = j.at("final_ln_gain").get<std::vector<double>>();
            model.final_ln_bias = j.at("final_ln_bias").get<std::vector<double>>();
        }
        model.validate();
        return model;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("model_from_json: schema mismatch: ") + e.what());
    }
}

void save_model(const TransformerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_model: cannot open " + path);
    out << model_to_json(model) << '\n';
    if (!out) throw std::runtime_error("save_model: write failed for " + path);
}

TransformerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_model: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return model_from_json(text);
}

} // namespace nn
