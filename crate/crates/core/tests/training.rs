//! Training-loop behavior on a synthetic planted-rule dataset: 64 contracts
//! whose labels are decided by the presence of marker functions, embedded
//! with the hash encoder.

use solintent::embed::{embed_contract, EmbeddingMatrix, HashEncoder};
use solintent::evalx::{confusion, metrics};
use solintent::extract::{FunctionKind, FunctionSnippet, Span};
use solintent::nn::{predict, train, IntentModel, ModelConfig, TrainConfig, Variant};
use solintent::rng::SplitMix64;

const MARKERS: [&str; 10] = [
    "function setFee(uint256 f) external onlyOwner { fee = f; }",
    "function setTrading(bool on) external onlyOwner { tradingOpen = on; }",
    "function blacklist(address bot) external onlyOwner { banned[bot] = true; }",
    "function reflect(uint256 amount) internal { rTotal = rTotal - amount; }",
    "function setMaxTx(uint256 amount) external onlyOwner { maxTx = amount; }",
    "function mint(address to, uint256 amount) external onlyOwner { supply += amount; }",
    "function trap() external payable { locked[msg.sender] += msg.value; }",
    "function claimReward() external { rewards[msg.sender] = 0; }",
    "function rebase(int256 delta) external { supply = adjust(supply, delta); }",
    "function setMaxSell(uint256 amount) external onlyOwner { maxSell = amount; }",
];

const FILLERS: [&str; 6] = [
    "function totalSupply() external view returns (uint256) { return supply; }",
    "function balanceOf(address who) external view returns (uint256) { return balances[who]; }",
    "function name() external pure returns (string memory) { return \"Token\"; }",
    "function symbol() external pure returns (string memory) { return \"TKN\"; }",
    "function decimals() external pure returns (uint8) { return 18; }",
    "function allowance(address a, address b) external view returns (uint256) { return allowed[a][b]; }",
];

fn snippet(text: &str) -> FunctionSnippet {
    FunctionSnippet {
        name: String::new(),
        owner: "Synth".to_string(),
        kind: FunctionKind::Function,
        text: text.to_string(),
        span: Span { start: 0, end: 0 },
    }
}

/// 64 synthetic contracts: each plants 1-3 label markers among fillers.
fn synthetic_dataset(dim: usize, seed: u64) -> Vec<(EmbeddingMatrix, Vec<f64>)> {
    let encoder = HashEncoder::new(dim, 1).unwrap();
    let mut rng = SplitMix64::new(seed);
    let mut data = Vec::with_capacity(64);
    for _ in 0..64 {
        let mut target = vec![0.0f64; 10];
        let n_labels = 1 + rng.below(3);
        let mut functions: Vec<FunctionSnippet> = Vec::new();
        for _ in 0..n_labels {
            let l = rng.below(10);
            if target[l] == 0.0 {
                target[l] = 1.0;
                functions.push(snippet(MARKERS[l]));
            }
        }
        let n_fillers = 2 + rng.below(3);
        for _ in 0..n_fillers {
            functions.push(snippet(FILLERS[rng.below(FILLERS.len())]));
        }
        rng.shuffle(&mut functions);
        let x = embed_contract(&functions, &encoder).unwrap();
        data.push((x, target));
    }
    data
}

fn overfit_config() -> ModelConfig {
    ModelConfig {
        max_functions: 8,
        feature_dim: 32,
        hidden: 16,
        labels: 10,
        variant: Variant::Bilstm,
    }
}

fn micro_f1(model: &IntentModel, data: &[(EmbeddingMatrix, Vec<f64>)]) -> f64 {
    let preds: Vec<Vec<f64>> = data.iter().map(|(x, _)| predict(model, x).unwrap()).collect();
    let targets: Vec<Vec<f64>> = data.iter().map(|(_, t)| t.clone()).collect();
    let counts = confusion(&preds, &targets, 0.5).unwrap();
    metrics(&counts).unwrap().f1
}

#[test]
fn first_five_epochs_pinned_and_strictly_decreasing() {
    let data = synthetic_dataset(32, 4242);
    let mut model = IntentModel::new(overfit_config(), 42).unwrap();
    let config = TrainConfig {
        learning_rate: 0.01,
        epochs: 5,
        batch_size: 8,
        seed: 42,
        ..TrainConfig::default()
    };
    let report = train(&mut model, &data, &config).unwrap();
    assert_eq!(report.epoch_loss.len(), 5);
    for w in report.epoch_loss.windows(2) {
        assert!(w[1] < w[0], "epoch-mean loss must strictly decrease: {:?}", report.epoch_loss);
    }
    // Frozen from the seeded reference run; the tolerance absorbs libm
    // differences across platforms.
    let pinned = [
        0.6017959691829159,
        0.4938750897247865,
        0.47817368809936284,
        0.47150035538234897,
        0.4598132812157842,
    ];
    for (got, want) in report.epoch_loss.iter().zip(pinned) {
        assert!(
            (got - want).abs() / want < 1e-6,
            "loss drifted from pinned history: got {got}, want {want}"
        );
    }
}

#[test]
fn overfits_the_training_set() {
    let data = synthetic_dataset(32, 4242);
    let mut model = IntentModel::new(overfit_config(), 42).unwrap();
    let mut epochs_used = 0usize;
    let mut f1 = micro_f1(&model, &data);
    while epochs_used < 500 && f1 < 0.95 {
        let config = TrainConfig {
            learning_rate: 0.01,
            epochs: 25,
            batch_size: 8,
            seed: 42 + epochs_used as u64,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &config).unwrap();
        epochs_used += 25;
        f1 = micro_f1(&model, &data);
    }
    assert!(
        f1 >= 0.95,
        "failed to overfit: micro-f1 {f1} after {epochs_used} epochs"
    );
}

#[test]
fn overfit_recovers_every_training_target() {
    // Train further and require exact recovery at threshold 0.5.
    let data = synthetic_dataset(32, 4242);
    let mut model = IntentModel::new(overfit_config(), 42).unwrap();
    let mut epochs_used = 0usize;
    loop {
        let config = TrainConfig {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 8,
            seed: 7 + epochs_used as u64,
            ..TrainConfig::default()
        };
        train(&mut model, &data, &config).unwrap();
        epochs_used += 50;
        let exact = data.iter().all(|(x, t)| {
            let y = predict(&model, x).unwrap();
            y.iter()
                .zip(t)
                .all(|(&p, &truth)| (p >= 0.5) == (truth >= 0.5))
        });
        if exact {
            return;
        }
        assert!(epochs_used < 1000, "targets not recovered after {epochs_used} epochs");
    }
}
