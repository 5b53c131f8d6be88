"""
Visualization - Chart results
Plots colored instances and chase growth
"""

from typing import Dict, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import numpy as np

from cliquewidth import ColoredInstance, color_key
from kernel import TOP, Instance


class Visualizer:
    """Visualize instances and engine results"""

    @staticmethod
    def instance_graph(inst: Instance) -> nx.MultiDiGraph:
        """Terms as nodes, binary atoms as labelled edges, other atoms as node labels"""
        graph = nx.MultiDiGraph()
        for term in inst.sorted_adom:
            graph.add_node(term, labels=[])
        for atom in inst:
            if atom.arity == 2:
                graph.add_edge(atom.args[0], atom.args[1], label=atom.predicate)
            elif atom.arity == 1 and atom.predicate != TOP:
                graph.nodes[atom.args[0]]["labels"].append(atom.predicate)
            elif atom.arity > 2:
                for i, t in enumerate(atom.args, start=1):
                    graph.nodes[t]["labels"].append(f"{atom.predicate}#{i}")
        return graph

    @staticmethod
    def plot_colored_instance(ci: ColoredInstance, title: str = "Colored Instance",
                              save_path: Optional[str] = None):
        """Draw terms colored by their color class"""

        graph = Visualizer.instance_graph(ci.inst)
        palette = sorted(set(ci.coloring.values()), key=color_key)
        cmap = plt.get_cmap("tab10")
        index = {c: i for i, c in enumerate(palette)}

        fig, ax = plt.subplots(figsize=(10, 8))
        if graph.number_of_nodes():
            # parallel edges share one arrow; loops go into the node label
            simple = nx.DiGraph()
            simple.add_nodes_from(graph.nodes)
            edge_labels: Dict = {}
            node_labels = {n: str(n) for n in graph.nodes}
            for u, v, d in graph.edges(data=True):
                if u == v:
                    node_labels[u] += f"\n↻{d['label']}"
                    continue
                simple.add_edge(u, v)
                edge_labels[(u, v)] = ",".join(sorted(filter(None, [edge_labels.get((u, v)), d["label"]])))
            for n, data in graph.nodes(data=True):
                if data["labels"]:
                    node_labels[n] += "\n" + ",".join(sorted(data["labels"]))

            pos = nx.spring_layout(simple, seed=0)
            colors = [cmap(index[ci.coloring[n]] % 10) for n in simple.nodes]
            nx.draw_networkx_nodes(simple, pos, node_color=colors, node_size=500, ax=ax)
            nx.draw_networkx_labels(simple, pos, labels=node_labels, font_size=8, ax=ax)
            nx.draw_networkx_edges(simple, pos, arrows=True, alpha=0.6, ax=ax)
            nx.draw_networkx_edge_labels(simple, pos, edge_labels=edge_labels, font_size=7, ax=ax)
            for color in palette:
                ax.scatter([], [], color=cmap(index[color] % 10), label=repr(color))
            ax.legend(title="colors", loc="best", fontsize=8)

        ax.set_title(title, fontsize=14, fontweight='bold')
        ax.axis("off")
        plt.tight_layout()
        if save_path:
            fig.savefig(save_path, dpi=150, bbox_inches='tight')
            print(f"💾 Chart saved to {save_path}")
        return fig

    @staticmethod
    def plot_chase_growth(results: Dict, title: str = "Chase Growth",
                          save_path: Optional[str] = None):
        """Atoms and nulls per chase step"""

        steps = results["steps"]
        k = np.array([s["step"] for s in steps])
        atoms = np.array([s["atoms"] for s in steps])
        nulls = np.array([s["nulls"] for s in steps])

        fig, ax = plt.subplots(figsize=(12, 6))
        ax.plot(k, atoms, linewidth=2, color='#2E86AB', marker='o', label='Atoms')
        ax.plot(k, nulls, linewidth=2, color='#A23B72', marker='s', label='Nulls')
        ax.fill_between(k, 0, atoms, color='#2E86AB', alpha=0.1)

        ax.set_xlabel('Chase step', fontsize=12)
        ax.set_ylabel('Count', fontsize=12)
        ax.set_title(title, fontsize=14, fontweight='bold')
        ax.set_xticks(k)
        ax.legend()
        ax.grid(True, alpha=0.3)

        plt.tight_layout()
        if save_path:
            fig.savefig(save_path, dpi=150, bbox_inches='tight')
            print(f"💾 Chart saved to {save_path}")
        return fig
