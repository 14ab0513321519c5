#include "maslda/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace maslda {

namespace {

using nlohmann::json;

class JsonWriter {
  public:
    explicit JsonWriter(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write file: " + path);
        out_ << "{";
    }
    ~JsonWriter() { out_ << "\n}\n"; }

    void field(const std::string& key, const std::string& value) {
        sep();
        out_ << '"' << key << "\": \"" << value << '"';
    }
    void field(const std::string& key, int value) {
        sep();
        out_ << '"' << key << "\": " << value;
    }
    void field(const std::string& key, double value) {
        sep();
        out_ << '"' << key << "\": " << number(value);
    }
    void field(const std::string& key, const std::vector<int>& values) {
        sep();
        out_ << '"' << key << "\": [";
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ",";
            out_ << values[i];
        }
        out_ << ']';
    }
    void numbers(const std::string& key, const double* data, std::size_t n) {
        sep();
        out_ << '"' << key << "\": [";
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out_ << ",";
            out_ << number(data[i]);
        }
        out_ << ']';
    }

  private:
    void sep() {
        if (first_) {
            first_ = false;
        } else {
            out_ << ",";
        }
        out_ << "\n  ";
    }
    static std::string number(double value) {
        if (!std::isfinite(value)) throw std::runtime_error("model contains non-finite value");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", value);
        return buf;
    }

    std::ofstream out_;
    bool first_ = true;
};

std::vector<double> rowmajor(const Mat& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    return j;
}

Mat mat_from(const json& arr, int rows, int cols, const std::string& name) {
    if (static_cast<int>(arr.size()) != rows * cols) {
        throw std::runtime_error("model field '" + name + "' has wrong length");
    }
    Mat m(rows, cols);
    int idx = 0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = arr[idx++].get<double>();
    }
    return m;
}

Vec vec_from(const json& arr, int n, const std::string& name) {
    if (static_cast<int>(arr.size()) != n) {
        throw std::runtime_error("model field '" + name + "' has wrong length");
    }
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = arr[i].get<double>();
    return v;
}

}  // namespace

void save_model(const ClassificationModel& model, const std::string& path) {
    JsonWriter w(path);
    w.field("model", std::string("maslda-classify"));
    w.field("K", model.num_topics);
    w.field("C", model.num_classes);
    w.field("V", model.vocab_size);
    w.field("R", model.num_annotators);
    w.field("alpha", model.hyper.alpha);
    w.field("tau", model.hyper.tau);
    w.field("omega", model.hyper.omega);
    w.field("annotator_ids", model.annotator_ids);
    const auto eta = rowmajor(model.eta);
    w.numbers("eta", eta.data(), eta.size());
    const auto zeta = rowmajor(model.zeta);
    w.numbers("zeta", zeta.data(), zeta.size());
    std::vector<double> xi;
    xi.reserve(static_cast<std::size_t>(model.num_annotators) * model.num_classes *
               model.num_classes);
    for (const Mat& m : model.xi) {
        const auto flat = rowmajor(m);
        xi.insert(xi.end(), flat.begin(), flat.end());
    }
    w.numbers("xi", xi.data(), xi.size());
}

void save_model(const RegressionModel& model, const std::string& path) {
    JsonWriter w(path);
    w.field("model", std::string("maslda-regress"));
    w.field("K", model.num_topics);
    w.field("V", model.vocab_size);
    w.field("R", model.num_annotators);
    w.field("alpha", model.hyper.alpha);
    w.field("tau", model.hyper.tau);
    w.field("sigma2", model.sigma2);
    w.field("annotator_ids", model.annotator_ids);
    w.numbers("eta", model.eta.data(), static_cast<std::size_t>(model.eta.size()));
    w.numbers("b", model.bias.data(), static_cast<std::size_t>(model.bias.size()));
    w.numbers("p", model.precision.data(), static_cast<std::size_t>(model.precision.size()));
    const auto zeta = rowmajor(model.zeta);
    w.numbers("zeta", zeta.data(), zeta.size());
}

std::string model_kind(const std::string& path) {
    return load_json(path).at("model").get<std::string>();
}

ClassificationModel load_classification_model(const std::string& path) {
    const json j = load_json(path);
    if (j.at("model").get<std::string>() != "maslda-classify") {
        throw std::runtime_error(path + ": not a classification model file");
    }
    ClassificationModel model;
    model.num_topics = j.at("K").get<int>();
    model.num_classes = j.at("C").get<int>();
    model.vocab_size = j.at("V").get<int>();
    model.num_annotators = j.at("R").get<int>();
    model.hyper.alpha = j.at("alpha").get<double>();
    model.hyper.tau = j.at("tau").get<double>();
    model.hyper.omega = j.at("omega").get<double>();
    model.annotator_ids = j.at("annotator_ids").get<std::vector<int>>();
    model.eta = mat_from(j.at("eta"), model.num_classes, model.num_topics, "eta");
    model.zeta = mat_from(j.at("zeta"), model.num_topics, model.vocab_size, "zeta");
    const json& xi = j.at("xi");
    const int block = model.num_classes * model.num_classes;
    if (static_cast<int>(xi.size()) != model.num_annotators * block) {
        throw std::runtime_error("model field 'xi' has wrong length");
    }
    model.xi.resize(model.num_annotators);
    int idx = 0;
    for (int r = 0; r < model.num_annotators; ++r) {
        model.xi[r].resize(model.num_classes, model.num_classes);
        for (int c = 0; c < model.num_classes; ++c) {
            for (int l = 0; l < model.num_classes; ++l) {
                model.xi[r](c, l) = xi[idx++].get<double>();
            }
        }
    }
    return model;
}

RegressionModel load_regression_model(const std::string& path) {
    const json j = load_json(path);
    if (j.at("model").get<std::string>() != "maslda-regress") {
        throw std::runtime_error(path + ": not a regression model file");
    }
    RegressionModel model;
    model.num_topics = j.at("K").get<int>();
    model.vocab_size = j.at("V").get<int>();
    model.num_annotators = j.at("R").get<int>();
    model.hyper.alpha = j.at("alpha").get<double>();
    model.hyper.tau = j.at("tau").get<double>();
    model.sigma2 = j.at("sigma2").get<double>();
    model.annotator_ids = j.at("annotator_ids").get<std::vector<int>>();
    model.eta = vec_from(j.at("eta"), model.num_topics, "eta");
    model.bias = vec_from(j.at("b"), model.num_annotators, "b");
    model.precision = vec_from(j.at("p"), model.num_annotators, "p");
    model.zeta = mat_from(j.at("zeta"), model.num_topics, model.vocab_size, "zeta");
    return model;
}

}  // namespace maslda
