//! Report emission: canonical JSON, CSV for tabular payloads, and an
//! aligned key/value table for humans.

use serde_json::Value;

pub fn emit(format: &str, value: &Value, csv: Option<String>) {
    match format {
        "csv" => match csv {
            Some(text) => print!("{text}"),
            None => println!("{}", serde_json::to_string(value).unwrap()),
        },
        "table" => print_table(value, 0),
        _ => println!("{}", serde_json::to_string_pretty(value).unwrap()),
    }
}

fn print_table(value: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}{k}:");
                        print_table(v, indent + 1);
                    }
                    _ => println!("{pad}{k}: {v}"),
                }
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}[{i}]");
                        print_table(v, indent + 1);
                    }
                    _ => println!("{pad}[{i}] {v}"),
                }
            }
        }
        _ => println!("{pad}{value}"),
    }
}
