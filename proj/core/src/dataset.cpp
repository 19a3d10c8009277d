#include "jitcal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "jitcal/errors.hpp"
#include "jitcal/rng.hpp"
#include "internal/csv.hpp"

namespace jitcal {

namespace {

using detail::fmt_double;
using detail::parse_double;
using detail::read_line;
using detail::split_csv;

// Cell values in public commit datasets are numeric except for booleans
// spelled as text ("True"/"False").
std::optional<double> parse_cell(const std::string& raw) {
    if (auto v = parse_double(raw)) return v;
    std::string s = detail::trim(raw);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true") return 1.0;
    if (s == "false") return 0.0;
    return std::nullopt;
}

int parse_binary_label(const std::string& raw, std::size_t row, const char* what) {
    const auto v = parse_cell(raw);
    if (!v) {
        throw ParseError("row " + std::to_string(row) + ": " + what + " '" + raw +
                         "' is not numeric");
    }
    if (*v != 0.0 && *v != 1.0) {
        throw ValidationError("row " + std::to_string(row) + ": " + what + " " + raw +
                              " outside {0,1}");
    }
    return static_cast<int>(*v);
}

bool is_id_column(const std::string& name) {
    return name == "id" || name == "_id" || name == "commit_id";
}

} // namespace

double sigmoid(double q) {
    if (q >= 0.0) return 1.0 / (1.0 + std::exp(-q));
    const double e = std::exp(q);
    return e / (1.0 + e);
}

double logit_of(double p) {
    const double c = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
    return std::log(c / (1.0 - c));
}

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

std::vector<LabeledInstance> load_commits(std::istream& in) {
    std::string line;
    if (!read_line(in, line)) throw SchemaError("empty input: no header row");
    const std::vector<std::string> header = split_csv(line);

    int label_col = -1;
    int id_col = -1;
    int la_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        if (label_col < 0 && (name == "bug" || name == "label")) label_col = static_cast<int>(c);
        else if (id_col < 0 && is_id_column(name)) id_col = static_cast<int>(c);
        else if (name == "la") la_col = static_cast<int>(c);
    }
    if (label_col < 0) throw SchemaError("missing label column: expected 'bug' or 'label'");
    if (la_col < 0) throw SchemaError("missing feature column 'la'");

    std::vector<LabeledInstance> out;
    std::size_t row = 0;
    while (read_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        LabeledInstance inst;
        inst.id = id_col >= 0 ? cells[id_col] : std::to_string(row);
        inst.label = parse_binary_label(cells[label_col], row, "label");
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<int>(c) == label_col || static_cast<int>(c) == id_col) continue;
            const std::string name = detail::trim(header[c]);
            const auto v = parse_cell(cells[c]);
            if (!v) {
                throw ParseError("row " + std::to_string(row) + ", column '" + name +
                                 "': value '" + cells[c] + "' is not numeric");
            }
            if (!std::isfinite(*v)) {
                throw ValidationError("row " + std::to_string(row) + ", column '" + name +
                                      "': value is not finite");
            }
            inst.features[name] = *v;
        }
        if (inst.features.at("la") < 0.0) {
            throw ValidationError("row " + std::to_string(row) + ": 'la' must be nonnegative");
        }
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<LabeledInstance> load_commits_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    return load_commits(in);
}

namespace {

PredictionRecord finish_record(std::string id, std::optional<double> logit, double prob,
                               int true_label, double threshold, std::size_t row) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw ValidationError("row " + std::to_string(row) + ": prob " + fmt_double(prob) +
                              " outside [0,1]");
    }
    PredictionRecord rec;
    rec.id = std::move(id);
    rec.prob = prob;
    rec.true_label = true_label;
    if (logit) {
        if (std::abs(sigmoid(*logit) - prob) > 1e-6) {
            throw ValidationError("row " + std::to_string(row) +
                                  ": logit and prob disagree (|sigmoid(logit) - prob| > 1e-6)");
        }
        rec.logit = *logit;
    } else {
        rec.logit = logit_of(prob);
    }
    rec.pred_label = prob >= threshold ? 1 : 0;
    return rec;
}

std::vector<PredictionRecord> load_predictions_csv(std::istream& in, double threshold) {
    std::string line;
    if (!read_line(in, line)) throw SchemaError("empty input: no header row");
    const std::vector<std::string> header = split_csv(line);

    int prob_col = -1, label_col = -1, logit_col = -1, id_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        if (name == "prob") prob_col = static_cast<int>(c);
        else if (name == "true_label") label_col = static_cast<int>(c);
        else if (name == "logit") logit_col = static_cast<int>(c);
        else if (is_id_column(name)) id_col = static_cast<int>(c);
    }
    if (prob_col < 0) throw SchemaError("missing column 'prob'");
    if (label_col < 0) throw SchemaError("missing column 'true_label'");

    std::vector<PredictionRecord> out;
    std::size_t row = 0;
    while (read_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        const auto prob = parse_double(cells[prob_col]);
        if (!prob) throw ParseError("row " + std::to_string(row) + ": prob is not numeric");
        const int true_label = parse_binary_label(cells[label_col], row, "true_label");
        std::optional<double> logit;
        if (logit_col >= 0 && !detail::trim(cells[logit_col]).empty()) {
            logit = parse_double(cells[logit_col]);
            if (!logit) throw ParseError("row " + std::to_string(row) + ": logit is not numeric");
        }
        std::string id = id_col >= 0 ? cells[id_col] : std::string();
        out.push_back(finish_record(std::move(id), logit, *prob, true_label, threshold, row));
    }
    return out;
}

std::vector<PredictionRecord> load_predictions_jsonl(std::istream& in, double threshold) {
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t row = 0;
    while (read_line(in, line)) {
        ++row;
        if (detail::trim(line).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("row " + std::to_string(row) + ": invalid JSON (" + e.what() + ")");
        }
        if (!obj.is_object() || !obj.contains("prob") || !obj.contains("true_label")) {
            throw ParseError("row " + std::to_string(row) +
                             ": object must contain 'prob' and 'true_label'");
        }
        if (!obj["prob"].is_number()) {
            throw ParseError("row " + std::to_string(row) + ": 'prob' is not a number");
        }
        const double prob = obj["prob"].get<double>();
        const int raw_label = obj["true_label"].is_number_integer()
                                  ? obj["true_label"].get<int>()
                                  : -1;
        if (raw_label != 0 && raw_label != 1) {
            throw ValidationError("row " + std::to_string(row) + ": true_label outside {0,1}");
        }
        std::optional<double> logit;
        if (obj.contains("logit") && !obj["logit"].is_null()) {
            if (!obj["logit"].is_number()) {
                throw ParseError("row " + std::to_string(row) + ": 'logit' is not a number");
            }
            logit = obj["logit"].get<double>();
        }
        std::string id = obj.value("id", std::string());
        out.push_back(finish_record(std::move(id), logit, prob, raw_label, threshold, row));
    }
    return out;
}

} // namespace

std::vector<PredictionRecord> load_predictions(std::istream& in, PredictionFormat format,
                                               double threshold) {
    return format == PredictionFormat::Csv ? load_predictions_csv(in, threshold)
                                           : load_predictions_jsonl(in, threshold);
}

std::vector<PredictionRecord> load_predictions_file(const std::string& path, double threshold) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    const bool jsonl = path.ends_with(".jsonl") || path.ends_with(".ndjson") ||
                       path.ends_with(".json");
    return load_predictions(in, jsonl ? PredictionFormat::JsonLines : PredictionFormat::Csv,
                            threshold);
}

void save_predictions(std::ostream& out, const std::vector<PredictionRecord>& records,
                      PredictionFormat format) {
    if (format == PredictionFormat::Csv) {
        out << "id,logit,prob,true_label\n";
        for (const auto& r : records) {
            out << detail::csv_escape(r.id) << ',' << fmt_double(r.logit) << ','
                << fmt_double(r.prob) << ',' << r.true_label << '\n';
        }
    } else {
        for (const auto& r : records) {
            nlohmann::json obj;
            if (!r.id.empty()) obj["id"] = r.id;
            obj["logit"] = r.logit;
            obj["prob"] = r.prob;
            obj["true_label"] = r.true_label;
            out << obj.dump() << '\n';
        }
    }
}

void save_commits(std::ostream& out, const std::vector<LabeledInstance>& instances) {
    if (instances.empty()) {
        out << "id,la,bug\n";
        return;
    }
    out << "id";
    for (const auto& [name, _] : instances.front().features) out << ',' << detail::csv_escape(name);
    out << ",bug\n";
    for (const auto& inst : instances) {
        out << detail::csv_escape(inst.id);
        for (const auto& [_, value] : inst.features) out << ',' << fmt_double(value);
        out << ',' << inst.label << '\n';
    }
}

FoldPlan split_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be >= 2, got " + std::to_string(k));
    if (n < static_cast<std::size_t>(k)) {
        throw ConfigError("cannot split " + std::to_string(n) + " instances into " +
                          std::to_string(k) + " folds");
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, -1);

    Rng rng(seed);
    const std::vector<std::size_t> perm = rng.permutation(n);
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t rem = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = base + (static_cast<std::size_t>(f) < rem ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) plan.assignments[perm[pos++]] = f;
    }
    return plan;
}

FoldPlan split_folds_stratified(const std::vector<int>& labels, int k, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2) throw ConfigError("fold count must be >= 2, got " + std::to_string(k));
    if (n < static_cast<std::size_t>(k)) {
        throw ConfigError("cannot split " + std::to_string(n) + " instances into " +
                          std::to_string(k) + " folds");
    }
    std::vector<std::size_t> pos_idx, neg_idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1) pos_idx.push_back(i);
        else if (labels[i] == 0) neg_idx.push_back(i);
        else throw ValidationError("label outside {0,1} at index " + std::to_string(i));
    }

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(n, -1);

    Rng rng(seed);
    int next_fold = 0;
    for (const auto* group : {&pos_idx, &neg_idx}) {
        const std::vector<std::size_t> perm = rng.permutation(group->size());
        for (std::size_t j = 0; j < perm.size(); ++j) {
            plan.assignments[(*group)[perm[j]]] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    return plan;
}

} // namespace jitcal
