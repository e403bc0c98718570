#include "treeinfluence/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "treeinfluence/errors.hpp"

namespace treeinf {

using nlohmann::json;

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void write_text_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << contents;
        out.flush();
        if (!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move '" + tmp + "' to '" + path + "'");
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

namespace {

json params_to_json(const TrainParams& p) {
    json doc;
    doc["trees"] = p.trees;
    doc["depth"] = p.depth;
    doc["learning_rate"] = p.learning_rate;
    doc["l2_reg"] = p.l2_reg;
    doc["loss"] = to_string(p.loss);
    doc["formula"] = to_string(p.formula);
    doc["seed"] = p.seed;
    doc["bias_override"] = p.bias_override ? json(*p.bias_override) : json(nullptr);
    doc["label_column"] = p.label_column;
    doc["weight_column"] = p.weight_column ? json(*p.weight_column) : json(nullptr);
    return doc;
}

TrainParams params_from_json(const json& doc) {
    TrainParams p;
    p.trees = doc.at("trees").get<int>();
    p.depth = doc.at("depth").get<int>();
    p.learning_rate = doc.at("learning_rate").get<double>();
    p.l2_reg = doc.at("l2_reg").get<double>();
    p.loss = loss_from_string(doc.at("loss").get<std::string>());
    p.formula = formula_from_string(doc.at("formula").get<std::string>());
    p.seed = doc.at("seed").get<std::uint64_t>();
    if (!doc.at("bias_override").is_null()) {
        p.bias_override = doc.at("bias_override").get<double>();
    }
    p.label_column = doc.at("label_column").get<std::string>();
    if (!doc.at("weight_column").is_null()) {
        p.weight_column = doc.at("weight_column").get<std::string>();
    }
    return p;
}

json dataset_to_json(const Dataset& ds) {
    json doc;
    doc["rows"] = ds.rows;
    doc["cols"] = ds.cols;
    doc["feature_names"] = ds.feature_names;
    doc["features"] = ds.features;  // row-major
    doc["labels"] = ds.labels;
    doc["weights"] = ds.weights;
    doc["ids"] = ds.ids;
    return doc;
}

Dataset dataset_from_json(const json& doc) {
    Dataset ds;
    ds.rows = doc.at("rows").get<std::int64_t>();
    ds.cols = doc.at("cols").get<std::int64_t>();
    ds.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    ds.features = doc.at("features").get<std::vector<double>>();
    ds.labels = doc.at("labels").get<std::vector<double>>();
    ds.weights = doc.at("weights").get<std::vector<double>>();
    ds.ids = doc.at("ids").get<std::vector<std::int64_t>>();
    ds.validate();
    return ds;
}

}  // namespace

json model_to_json(const TrainedModel& model, bool include_trace) {
    const Ensemble& ens = model.ensemble;
    json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["params"] = params_to_json(ens.params);
    doc["bias"] = ens.bias;
    doc["n_features"] = ens.n_features;
    doc["feature_names"] = ens.feature_names;

    json trees = json::array();
    for (const Tree& tree : ens.trees) {
        json node;
        node["depth"] = tree.structure.depth;
        json splits = json::array();
        for (const SplitNode& s : tree.structure.nodes) {
            splits.push_back(json::array({s.feature, s.threshold}));
        }
        node["splits"] = std::move(splits);
        node["leaf_values"] = tree.leaf_values;
        trees.push_back(std::move(node));
    }
    doc["trees"] = std::move(trees);

    if (include_trace && model.trace) {
        const TrainingTrace& trace = *model.trace;
        doc["train_data"] = dataset_to_json(trace.data);
        json steps = json::array();
        for (const TraceStep& step : trace.steps) {
            json s;
            s["leaf"] = step.leaf;
            s["a_prev"] = step.a_prev;
            s["g"] = step.g;
            s["h"] = step.h;
            s["k"] = step.k;
            s["grad_sum"] = step.grad_sum;
            s["weight_sum"] = step.weight_sum;
            s["hess_sum"] = step.hess_sum;
            steps.push_back(std::move(s));
        }
        doc["trace"] = json{{"steps", std::move(steps)}};
    }
    return doc;
}

TrainedModel model_from_json(const json& doc) {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
        throw std::invalid_argument("unsupported model format version " +
                                    std::to_string(version));
    }
    TrainedModel model;
    Ensemble& ens = model.ensemble;
    ens.params = params_from_json(doc.at("params"));
    ens.bias = doc.at("bias").get<double>();
    ens.n_features = doc.at("n_features").get<std::int64_t>();
    ens.feature_names = doc.at("feature_names").get<std::vector<std::string>>();

    for (const json& node : doc.at("trees")) {
        Tree tree;
        tree.structure.depth = node.at("depth").get<int>();
        for (const json& s : node.at("splits")) {
            tree.structure.nodes.push_back(
                SplitNode{s.at(0).get<std::int32_t>(), s.at(1).get<double>()});
        }
        tree.leaf_values = node.at("leaf_values").get<std::vector<double>>();
        const std::size_t expected_nodes = (1u << tree.structure.depth) - 1;
        if (tree.structure.nodes.size() != expected_nodes ||
            tree.leaf_values.size() != expected_nodes + 1) {
            throw std::invalid_argument("model JSON: tree arrays have wrong sizes");
        }
        ens.trees.push_back(std::move(tree));
    }

    if (doc.contains("trace")) {
        TrainingTrace trace;
        trace.data = dataset_from_json(doc.at("train_data"));
        for (const json& s : doc.at("trace").at("steps")) {
            TraceStep step;
            step.leaf = s.at("leaf").get<std::vector<std::int32_t>>();
            step.a_prev = s.at("a_prev").get<std::vector<double>>();
            step.g = s.at("g").get<std::vector<double>>();
            step.h = s.at("h").get<std::vector<double>>();
            step.k = s.at("k").get<std::vector<double>>();
            step.grad_sum = s.at("grad_sum").get<std::vector<double>>();
            step.weight_sum = s.at("weight_sum").get<std::vector<double>>();
            step.hess_sum = s.at("hess_sum").get<std::vector<double>>();
            trace.steps.push_back(std::move(step));
        }
        if (trace.steps.size() != ens.trees.size()) {
            throw std::invalid_argument("model JSON: trace/tree step counts differ");
        }
        trace.rebuild_members();
        model.trace = std::move(trace);
    }
    return model;
}

void save_model(const TrainedModel& model, const std::string& path, bool include_trace) {
    write_text_atomic(path, model_to_json(model, include_trace).dump());
}

TrainedModel load_model(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& err) {
        throw std::invalid_argument("'" + path + "' is not valid model JSON: " + err.what());
    }
    return model_from_json(doc);
}

}  // namespace treeinf
