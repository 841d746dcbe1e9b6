PrintWriter writer = new PrintWriter("f.txt", true);
writer.write("text to append");
writer.close();
