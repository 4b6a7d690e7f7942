#include "ridfr/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ridfr/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ridfr {

std::vector<int> IdentityBank::split_indices(Split s) const {
    std::vector<int> out;
    for (size_t i = 0; i < identities.size(); ++i)
        if (identities[i].split == s) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> IdentityBank::alignment_eligible(Split s) const {
    std::vector<int> out;
    for (size_t i = 0; i < identities.size(); ++i)
        if (identities[i].split == s && identities[i].images.size() >= 3)
            out.push_back(static_cast<int>(i));
    return out;
}

uint64_t IdentityBank::content_hash() const {
    uint64_t h = fnv1a64(&side, sizeof side);
    for (const auto& ident : identities) {
        h = fnv1a64(ident.label.data(), ident.label.size(), h);
        int sp = static_cast<int>(ident.split);
        h = fnv1a64(&sp, sizeof sp, h);
        for (const auto& im : ident.images) {
            uint64_t ih = image_hash(im.pixels);
            h = fnv1a64(&ih, sizeof ih, h);
        }
    }
    return h;
}

IdentityBank build_identity_bank(int num_train_ids, int num_test_ids, int refs_lo, int refs_hi,
                                 int side, uint64_t seed) {
    int num_ids = num_train_ids + num_test_ids;
    if (num_ids < 2) throw std::invalid_argument("build_identity_bank: need at least 2 identities");
    if (num_train_ids < 1 || num_test_ids < 0)
        throw std::invalid_argument("build_identity_bank: bad split sizes");
    if (refs_lo < 3 || refs_hi > 21 || refs_hi < refs_lo)
        throw std::invalid_argument("build_identity_bank: refs range must lie within [3,21]");

    IdentityBank bank;
    bank.side = side;
    std::vector<IdentityParams> taken;
    for (int i = 0; i < num_ids; ++i) {
        IdentityParams p;
        bool ok = false;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            p = sample_identity_params(derive_seed(seed, 0x1d, i, attempt));
            if (std::find(taken.begin(), taken.end(), p) == taken.end()) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("build_identity_bank: identity collision redraw failed");
        taken.push_back(p);

        BankIdentity ident;
        ident.label = "id" + std::string(i < 10 ? "00" : (i < 100 ? "0" : "")) + std::to_string(i);
        ident.split = i < num_train_ids ? Split::train : Split::test;
        ident.params = p;
        Pcg32 cnt_rng(derive_seed(seed, 0x2e, i));
        int n_refs = cnt_rng.uniform_int(refs_lo, refs_hi);
        for (int j = 0; j < n_refs; ++j) {
            BankImage im;
            im.nuisance = sample_nuisance_params(derive_seed(seed, 0x3f, i, j));
            im.pixels = render_toy_face(p, *im.nuisance, side);
            im.file = "images/" + ident.label + "/" + std::to_string(j) + ".png";
            ident.images.push_back(std::move(im));
        }
        bank.identities.push_back(std::move(ident));
    }
    return bank;
}

namespace {

int pick_other(Pcg32& rng, int n, int excluded) {
    int k = rng.uniform_int(0, n - 2);
    return k >= excluded ? k + 1 : k;
}

}  // namespace

TrainingQuadruple sample_training_quadruple(const IdentityBank& bank,
                                            const DegradationRanges& deg_ranges,
                                            const ReferenceDownsample& refdown, uint64_t seed) {
    auto eligible = bank.alignment_eligible(Split::train);
    if (eligible.empty())
        throw std::invalid_argument(
            "sample_training_quadruple: no identity has >= 3 references in the train split");

    Pcg32 rng(seed, 0x71756164ULL);
    TrainingQuadruple q;
    q.identity_index = eligible[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(eligible.size()) - 1))];
    const auto& ident = bank.identities[static_cast<size_t>(q.identity_index)];
    int n = static_cast<int>(ident.images.size());

    q.hq_image_index = rng.uniform_int(0, n - 1);
    q.hq = ident.images[static_cast<size_t>(q.hq_image_index)].pixels;

    q.id1_image_index = pick_other(rng, n, q.hq_image_index);
    // draw id2 from the remaining n-2 indices so id1 != id2
    int second = rng.uniform_int(0, n - 3);
    for (int idx : {std::min(q.hq_image_index, q.id1_image_index),
                    std::max(q.hq_image_index, q.id1_image_index)})
        if (second >= idx) ++second;
    q.id2_image_index = second;

    q.deg = sample_degradation_params(derive_seed(seed, 0x10), deg_ranges);
    q.lq = degrade(q.hq, q.deg, derive_seed(seed, 0x11));
    q.id1 = downsample_reference(ident.images[static_cast<size_t>(q.id1_image_index)].pixels,
                                 derive_seed(seed, 0x12), refdown.min_side, refdown.max_side);
    q.id2 = downsample_reference(ident.images[static_cast<size_t>(q.id2_image_index)].pixels,
                                 derive_seed(seed, 0x13), refdown.min_side, refdown.max_side);
    return q;
}

TrainingPair sample_training_pair(const IdentityBank& bank, const DegradationRanges& deg_ranges,
                                  const ReferenceDownsample& refdown, uint64_t seed) {
    auto train = bank.split_indices(Split::train);
    if (train.empty()) throw std::invalid_argument("sample_training_pair: empty train split");

    Pcg32 rng(seed, 0x70616972ULL);
    TrainingPair p;
    p.identity_index = train[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(train.size()) - 1))];
    const auto& ident = bank.identities[static_cast<size_t>(p.identity_index)];
    int n = static_cast<int>(ident.images.size());

    int hq_idx = rng.uniform_int(0, n - 1);
    p.hq = ident.images[static_cast<size_t>(hq_idx)].pixels;
    int ref_idx = n >= 2 ? pick_other(rng, n, hq_idx) : hq_idx;

    p.deg = sample_degradation_params(derive_seed(seed, 0x10), deg_ranges);
    p.lq = degrade(p.hq, p.deg, derive_seed(seed, 0x11));
    p.id = downsample_reference(ident.images[static_cast<size_t>(ref_idx)].pixels,
                                derive_seed(seed, 0x12), refdown.min_side, refdown.max_side);
    return p;
}

IdentityBank ingest_image_folder(const std::string& root, int side) {
    if (!fs::is_directory(root))
        throw std::invalid_argument("ingest_image_folder: not a directory: " + root);

    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw std::invalid_argument("ingest_image_folder: no identity directories under " + root);

    IdentityBank bank;
    bank.side = side;
    for (const auto& dir : dirs) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::invalid_argument("ingest_image_folder: identity directory has no images: " +
                                        dir.string());

        BankIdentity ident;
        ident.label = dir.filename().string();
        for (size_t j = 0; j < files.size(); ++j) {
            Image img = read_image(files[j].string());
            // center crop to square, then resize
            int s = std::min(img.h, img.w);
            int y0 = (img.h - s) / 2, x0 = (img.w - s) / 2;
            Image crop(s, s);
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x)
                    for (int c = 0; c < 3; ++c) crop.at(y, x, c) = img.at(y0 + y, x0 + x, c);
            BankImage im;
            im.pixels = clip01(resize_bicubic(crop, side, side));
            im.file = "images/" + ident.label + "/" + std::to_string(j) + ".png";
            ident.images.push_back(std::move(im));
        }
        bank.identities.push_back(std::move(ident));
    }
    return bank;
}

void save_bank(const IdentityBank& bank, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["side"] = bank.side;
    manifest["identities"] = json::array();
    for (const auto& ident : bank.identities) {
        json j;
        j["label"] = ident.label;
        j["split"] = ident.split == Split::train ? "train" : "test";
        if (ident.params) {
            const auto& p = *ident.params;
            j["params"] = {{"face_aspect", p.face_aspect},
                           {"hue", p.hue},
                           {"eye_spacing", p.eye_spacing},
                           {"nose_scale", p.nose_scale},
                           {"jaw_curvature", p.jaw_curvature}};
        }
        j["images"] = json::array();
        for (const auto& im : ident.images) {
            json ji;
            ji["file"] = im.file;
            if (im.nuisance) {
                const auto& n = *im.nuisance;
                ji["nuisance"] = {{"rotation_deg", n.rotation_deg}, {"tx", n.tx},
                                  {"ty", n.ty},                     {"mouth_curve", n.mouth_curve},
                                  {"hair", hair_style_name(n.hair)}, {"brightness", n.brightness}};
            }
            j["images"].push_back(ji);
            fs::path out = fs::path(dir) / im.file;
            fs::create_directories(out.parent_path());
            write_png(out.string(), im.pixels);
        }
        manifest["identities"].push_back(j);
    }
    std::ofstream f(fs::path(dir) / "manifest.json");
    if (!f) throw std::runtime_error("save_bank: cannot write manifest under " + dir);
    f << manifest.dump(2) << "\n";
}

IdentityBank load_bank(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw std::runtime_error("load_bank: missing manifest.json under " + dir);
    json manifest = json::parse(f);

    IdentityBank bank;
    bank.side = manifest.at("side").get<int>();
    for (const auto& j : manifest.at("identities")) {
        BankIdentity ident;
        ident.label = j.at("label").get<std::string>();
        ident.split = j.at("split").get<std::string>() == "test" ? Split::test : Split::train;
        if (j.contains("params")) {
            IdentityParams p;
            const auto& jp = j.at("params");
            p.face_aspect = jp.at("face_aspect").get<double>();
            p.hue = jp.at("hue").get<double>();
            p.eye_spacing = jp.at("eye_spacing").get<double>();
            p.nose_scale = jp.at("nose_scale").get<double>();
            p.jaw_curvature = jp.at("jaw_curvature").get<double>();
            ident.params = p;
        }
        for (const auto& ji : j.at("images")) {
            BankImage im;
            im.file = ji.at("file").get<std::string>();
            if (ji.contains("nuisance")) {
                NuisanceParams n;
                const auto& jn = ji.at("nuisance");
                n.rotation_deg = jn.at("rotation_deg").get<double>();
                n.tx = jn.at("tx").get<double>();
                n.ty = jn.at("ty").get<double>();
                n.mouth_curve = jn.at("mouth_curve").get<double>();
                n.hair = hair_style_from_name(jn.at("hair").get<std::string>());
                n.brightness = jn.at("brightness").get<double>();
                im.nuisance = n;
            }
            im.pixels = read_png((fs::path(dir) / im.file).string());
            ident.images.push_back(std::move(im));
        }
        bank.identities.push_back(std::move(ident));
    }
    return bank;
}

}  // namespace ridfr
