use molbench::smiles::parse_smiles;

fn main() {
    for name in ["delaney", "freesolv", "bace", "bbbp", "biohl", "rbiodeg"] {
        let path = format!("data/{name}.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        let mut total = 0;
        let mut failures = Vec::new();
        for line in text.lines().skip(1) {
            let smi = line.rsplit_once(',').unwrap().0;
            total += 1;
            if let Err(e) = parse_smiles(smi) {
                failures.push((smi.to_string(), e));
            }
        }
        println!("{name}: {total} rows, {} failures", failures.len());
        for (smi, e) in failures.iter().take(8) {
            println!("   {smi} -> {e}");
        }
    }
}
