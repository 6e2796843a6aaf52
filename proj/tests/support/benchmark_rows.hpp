#pragma once

#include <string_view>
#include <vector>

namespace geoprobe::testing {

// Published per-model results: Acc, Acc/attack, ASR, Replacement.
struct BenchmarkRow {
  std::string_view group;
  std::string_view model;
  double acc;
  double acc_under_attack;
  double asr;
  double replacement;
};

inline const std::vector<BenchmarkRow>& dataset_rows() {
  static const std::vector<BenchmarkRow> rows = {
      {"imdb", "T5-60m", 0.8484, 0.1256, 0.8491, 0.0929},
      {"imdb", "T5-220m", 0.8011, 0.0436, 0.9463, 0.0722},
      {"imdb", "T5-770m", 0.9048, 0.1536, 0.8312, 0.1143},
      {"imdb", "T5-3b", 0.9146, 0.3259, 0.6436, 0.1413},
      {"imdb", "T5-11b", 0.9122, 0.3098, 0.6604, 0.1330},
      {"imdb", "OPT-125m", 0.8616, 0.6637, 0.2297, 0.0365},
      {"imdb", "OPT-350m", 0.8564, 0.6924, 0.1915, 0.0305},
      {"imdb", "OPT-1.3b", 0.9231, 0.7515, 0.1859, 0.0421},
      {"imdb", "OPT-2.7b", 0.9198, 0.7651, 0.1682, 0.0396},
      {"imdb", "OPT-6.7b", 0.9408, 0.7864, 0.1641, 0.0528},
      {"imdb", "OPT-13b", 0.9431, 0.8016, 0.1500, 0.0671},
      {"imdb", "Llama-7b", 0.9483, 0.8203, 0.1350, 0.0816},
      {"imdb", "Llama-13b", 0.9472, 0.8237, 0.1304, 0.0875},

      {"sst2", "T5-60m", 0.9083, 0.2419, 0.7304, 0.1428},
      {"sst2", "T5-220m", 0.8884, 0.1228, 0.8622, 0.1611},
      {"sst2", "T5-770m", 0.8739, 0.0534, 0.9395, 0.1785},
      {"sst2", "T5-3b", 0.9495, 0.1563, 0.8437, 0.1987},
      {"sst2", "T5-11b", 0.9656, 0.2248, 0.7672, 0.2043},
      {"sst2", "OPT-125m", 0.8807, 0.7409, 0.1587, 0.0607},
      {"sst2", "OPT-350m", 0.9011, 0.7716, 0.1437, 0.0598},
      {"sst2", "OPT-1.3b", 0.9443, 0.8227, 0.1288, 0.0733},
      {"sst2", "OPT-2.7b", 0.8897, 0.7921, 0.1097, 0.0476},
      {"sst2", "OPT-6.7b", 0.9693, 0.8682, 0.1043, 0.0550},
      {"sst2", "OPT-13b", 0.9656, 0.7867, 0.1853, 0.0719},
      {"sst2", "Llama-7b", 0.9683, 0.8203, 0.1528, 0.0916},
      {"sst2", "Llama-13b", 0.9632, 0.8124, 0.1566, 0.0877},

      {"mrpc", "T5-60m", 0.8048, 0.0325, 0.9594, 0.0720},
      {"mrpc", "T5-220m", 0.8035, 0.0633, 0.9203, 0.1100},
      {"mrpc", "T5-770m", 0.8924, 0.1992, 0.7771, 0.1203},
      {"mrpc", "T5-3b", 0.8584, 0.1074, 0.8739, 0.0917},
      {"mrpc", "T5-11b", 0.8877, 0.0712, 0.9196, 0.0873},
      {"mrpc", "OPT-125m", 0.8321, 0.6504, 0.2184, 0.0332},
      {"mrpc", "OPT-350m", 0.8956, 0.6741, 0.2473, 0.0437},
      {"mrpc", "OPT-1.3b", 0.9134, 0.7721, 0.1547, 0.0419},
      {"mrpc", "OPT-2.7b", 0.9128, 0.7854, 0.1396, 0.0533},
      {"mrpc", "OPT-6.7b", 0.9096, 0.7902, 0.1313, 0.0579},
      {"mrpc", "OPT-13b", 0.9254, 0.8183, 0.1157, 0.0560},
      {"mrpc", "Llama-7b", 0.9277, 0.8256, 0.1101, 0.0637},
      {"mrpc", "Llama-13b", 0.9198, 0.8107, 0.1186, 0.0742},

      {"agnews", "T5-60m", 0.8606, 0.3608, 0.5807, 0.1740},
      {"agnews", "T5-220m", 0.9084, 0.5370, 0.4098, 0.1864},
      {"agnews", "T5-770m", 0.9278, 0.6597, 0.2896, 0.1860},
      {"agnews", "T5-3b", 0.9193, 0.7267, 0.2102, 0.1834},
      {"agnews", "T5-11b", 0.9212, 0.8469, 0.1531, 0.1867},
      {"agnews", "OPT-125m", 0.8152, 0.6040, 0.2591, 0.0809},
      {"agnews", "OPT-350m", 0.8321, 0.6036, 0.2746, 0.0864},
      {"agnews", "OPT-1.3b", 0.8806, 0.6316, 0.2828, 0.0912},
      {"agnews", "OPT-2.7b", 0.9175, 0.7028, 0.2340, 0.0833},
      {"agnews", "OPT-6.7b", 0.9341, 0.7143, 0.2353, 0.0756},
      {"agnews", "OPT-13b", 0.9456, 0.7745, 0.1809, 0.0941},
      {"agnews", "Llama-7b", 0.9328, 0.7315, 0.2158, 0.0864},
      {"agnews", "Llama-13b", 0.9338, 0.7688, 0.1767, 0.0837},

      {"dbpedia", "T5-60m", 0.9817, 0.3974, 0.5952, 0.1187},
      {"dbpedia", "T5-220m", 0.9765, 0.4082, 0.5819, 0.1234},
      {"dbpedia", "T5-770m", 0.9921, 0.7476, 0.2464, 0.1483},
      {"dbpedia", "T5-3b", 0.9914, 0.8608, 0.1317, 0.1550},
      {"dbpedia", "T5-11b", 0.9919, 0.8815, 0.1113, 0.1724},
      {"dbpedia", "OPT-125m", 0.9034, 0.6512, 0.2792, 0.0534},
      {"dbpedia", "OPT-350m", 0.9511, 0.6718, 0.2937, 0.0305},
      {"dbpedia", "OPT-1.3b", 0.9784, 0.7046, 0.2798, 0.0496},
      {"dbpedia", "OPT-2.7b", 0.9822, 0.7513, 0.2351, 0.0552},
      {"dbpedia", "OPT-6.7b", 0.9907, 0.7780, 0.2147, 0.0641},
      {"dbpedia", "OPT-13b", 0.9916, 0.7912, 0.2021, 0.0576},
      {"dbpedia", "Llama-7b", 0.9908, 0.7596, 0.2333, 0.0881},
      {"dbpedia", "Llama-13b", 0.9921, 0.7286, 0.2656, 0.0912},
  };
  return rows;
}

// Variant studies on imdb: instruction tuning, precision, LoRA, classification head.
inline const std::vector<BenchmarkRow>& variant_rows() {
  static const std::vector<BenchmarkRow> rows = {
      {"instruction", "T5-60m", 0.8484, 0.1256, 0.8491, 0.0929},
      {"instruction", "Flan-T5-60m", 0.8453, 0.0882, 0.8968, 0.0820},
      {"instruction", "T5-220m", 0.8011, 0.0436, 0.9463, 0.0722},
      {"instruction", "Flan-T5-220m", 0.8777, 0.0996, 0.8862, 0.0978},
      {"instruction", "T5-770m", 0.9048, 0.1536, 0.8312, 0.1143},
      {"instruction", "Flan-T5-770m", 0.9141, 0.1171, 0.8729, 0.1106},
      {"instruction", "T5-3b", 0.9146, 0.3259, 0.6436, 0.1413},
      {"instruction", "Flan-T5-3b", 0.9228, 0.2328, 0.7489, 0.1261},
      {"instruction", "T5-11b", 0.9348, 0.4904, 0.4752, 0.1326},
      {"instruction", "Flan-T5-11b", 0.9122, 0.3098, 0.6604, 0.1330},

      {"precision", "T5-770m-fp16", 0.9106, 0.1631, 0.8208, 0.1196},
      {"precision", "T5-770m-int8", 0.9048, 0.1536, 0.8312, 0.1143},
      {"precision", "T5-770m-int4", 0.9210, 0.1725, 0.8127, 0.1211},
      {"precision", "OPT-1.3b-fp16", 0.9218, 0.7496, 0.1868, 0.0536},
      {"precision", "OPT-1.3b-int8", 0.9231, 0.7515, 0.1859, 0.0421},
      {"precision", "OPT-1.3b-int4", 0.9207, 0.7531, 0.1820, 0.0498},

      {"lora", "T5-770m", 0.9067, 0.1499, 0.8347, 0.1036},
      {"lora", "T5-770m-Lora", 0.9048, 0.1536, 0.8312, 0.1143},
      {"lora", "OPT-1.3b", 0.9135, 0.7448, 0.1847, 0.0366},
      {"lora", "OPT-1.3b-LoRA", 0.9231, 0.7515, 0.1859, 0.0421},
      {"lora", "OPT-2.7b", 0.9266, 0.7741, 0.1646, 0.0452},
      {"lora", "OPT-2.7b-LoRA", 0.9198, 0.7651, 0.1682, 0.0396},

      {"head", "OPT-125m", 0.8616, 0.6637, 0.2297, 0.0365},
      {"head", "OPT-125m-head", 0.9074, 0.6215, 0.3151, 0.0476},
      {"head", "OPT-350m", 0.8564, 0.6924, 0.1915, 0.0305},
      {"head", "OPT-350m-head", 0.9152, 0.6643, 0.2741, 0.0682},
      {"head", "OPT-1.3b", 0.9231, 0.7515, 0.1859, 0.0421},
      {"head", "OPT-1.3b-head", 0.9316, 0.7621, 0.1819, 0.0533},
      {"head", "OPT-2.7b", 0.9198, 0.7651, 0.1682, 0.0396},
      {"head", "OPT-2.7b-head", 0.9367, 0.7704, 0.1775, 0.0516},
      {"head", "OPT-6.7b", 0.9408, 0.7864, 0.1641, 0.0528},
      {"head", "OPT-6.7b-head", 0.9422, 0.7765, 0.1759, 0.0627},
      {"head", "OPT-13b", 0.9431, 0.8016, 0.1500, 0.0671},
      {"head", "OPT-13b-head", 0.9427, 0.7877, 0.1644, 0.0641},
  };
  return rows;
}

}  // namespace geoprobe::testing
