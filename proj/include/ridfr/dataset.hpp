#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ridfr/degradation.hpp"
#include "ridfr/faces.hpp"
#include "ridfr/image.hpp"

namespace ridfr {

enum class Split { train = 0, test = 1 };

struct BankImage {
    Image pixels;
    std::optional<NuisanceParams> nuisance;  // absent for ingested data
    std::string file;                        // relative path inside the bank dir
};

struct BankIdentity {
    std::string label;
    Split split = Split::train;
    std::optional<IdentityParams> params;  // absent for ingested data
    std::vector<BankImage> images;
};

struct IdentityBank {
    int side = 64;
    std::vector<BankIdentity> identities;

    std::vector<int> split_indices(Split s) const;
    // identities usable for alignment sampling (HQ target + two distinct refs)
    std::vector<int> alignment_eligible(Split s) const;
    uint64_t content_hash() const;
};

// <LQ, HQ, ID1, ID2> with a shared identity; the unit of alignment training.
struct TrainingQuadruple {
    Image lq, hq, id1, id2;
    int identity_index = -1;
    int hq_image_index = -1;
    int id1_image_index = -1;
    int id2_image_index = -1;
    DegradationParams deg;
};

// <LQ, HQ, ID> pair used by content training; identities with fewer than
// three references are still usable here.
struct TrainingPair {
    Image lq, hq, id;
    int identity_index = -1;
    DegradationParams deg;
};

struct ReferenceDownsample {
    int min_side = 8;
    int max_side = 64;
};

// Procedural bank: num_train + num_test identities with distinct
// IdentityParams, each holding a seeded count of rendered references.
IdentityBank build_identity_bank(int num_train_ids, int num_test_ids, int refs_lo, int refs_hi,
                                 int side, uint64_t seed);

TrainingQuadruple sample_training_quadruple(const IdentityBank& bank,
                                            const DegradationRanges& deg_ranges,
                                            const ReferenceDownsample& refdown, uint64_t seed);

TrainingPair sample_training_pair(const IdentityBank& bank, const DegradationRanges& deg_ranges,
                                  const ReferenceDownsample& refdown, uint64_t seed);

// Folder layout: root/<identity>/<image>.{png,jpg}. Images are center
// cropped and resized to `side`; IdentityParams stay absent, which disables
// the oracle metrics for ingested banks.
IdentityBank ingest_image_folder(const std::string& root, int side);

void save_bank(const IdentityBank& bank, const std::string& dir);
IdentityBank load_bank(const std::string& dir);

}  // namespace ridfr
