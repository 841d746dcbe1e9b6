PrintWriter writer = new PrintWriter("notes.txt");
writer.write("remember this");
